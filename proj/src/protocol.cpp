#include "lcsim/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <thread>

#include <fmt/format.h>

#include "json.hpp"
#include "lcsim/channel.hpp"
#include "lcsim/error.hpp"

namespace lcsim {

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::standard: return "standard";
    case EstimatorKind::weighted: return "weighted";
    case EstimatorKind::coincidence: return "coincidence";
  }
  return "?";
}

EstimatorKind estimator_kind_from_string(std::string_view name) {
  if (name == "standard") return EstimatorKind::standard;
  if (name == "weighted") return EstimatorKind::weighted;
  if (name == "coincidence") return EstimatorKind::coincidence;
  throw InvalidArgument("unknown estimator '" + std::string(name) + "'");
}

EmissionRecord emit(std::uint64_t tick, const CounterRng& rng) {
  return {tick, Angle{kTwoPi * rng.uniform(tick)}};
}

std::vector<EmissionRecord> run_source(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("source needs at least one pair");
  const CounterRng rng{seed};
  std::vector<EmissionRecord> out;
  out.reserve(n);
  for (std::uint64_t t = 0; t < n; ++t) out.push_back(emit(t, rng));
  return out;
}

std::optional<DetectionRecord> detect(const StationConfig& cfg, const CounterRng& rng,
                                      const EmissionRecord& e) {
  const double window = std::abs(std::cos(e.s.value() - cfg.setting.value()));
  double weight = 1.0;
  if (cfg.mode == DetectMode::acceptance) {
    if (!(rng.uniform(e.tick) < window)) return std::nullopt;
  } else if (cfg.side == cfg.weight_side) {
    weight = 0.5 * kPi * window;
  }
  return DetectionRecord{e.tick + cfg.offset, spin_value({cfg.side, cfg.setting}, e.s), weight};
}

std::vector<DetectionRecord> run_station(const StationConfig& cfg,
                                         std::span<const EmissionRecord> emissions) {
  const CounterRng rng{cfg.seed};
  std::vector<DetectionRecord> out;
  out.reserve(cfg.mode == DetectMode::always_detect ? emissions.size() : emissions.size() * 2 / 3);
  for (const auto& e : emissions) {
    if (auto d = detect(cfg, rng, e)) out.push_back(*d);
  }
  return out;
}

std::vector<CoincidentPair> match_coincidences(std::span<const DetectionRecord> r1,
                                               std::span<const DetectionRecord> r2) {
  std::vector<CoincidentPair> out;
  std::size_t i = 0, j = 0;
  while (i < r1.size() && j < r2.size()) {
    if (r1[i].tick < r2[j].tick) {
      ++i;
    } else if (r2[j].tick < r1[i].tick) {
      ++j;
    } else {
      out.push_back({r1[i].value, r2[j].value, r1[i].weight * r2[j].weight});
      ++i;
      ++j;
    }
  }
  return out;
}

namespace {

// Running mean and variance of per-event products (Welford).
struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  CorrelationEstimate estimate(EstimatorKind kind) const {
    CorrelationEstimate e;
    e.kind = kind;
    e.n = n;
    e.value = mean;
    e.std_error = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    return e;
  }
};

void require_same_ticks(std::span<const DetectionRecord> r1, std::span<const DetectionRecord> r2) {
  if (r1.size() != r2.size()) {
    throw InvalidArgument("full-ensemble estimators need one record per pair on both sides");
  }
  for (std::size_t k = 0; k < r1.size(); ++k) {
    if (r1[k].tick != r2[k].tick) {
      throw InvalidArgument("tick mismatch at index " + std::to_string(k) +
                            "; pairs are not distinguishable");
    }
  }
}

}  // namespace

CorrelationEstimate correlation_dp(std::span<const CoincidentPair> pairs) {
  if (pairs.empty()) throw EmptySampleError("no coincidences; distant-pair correlation is undefined");
  Moments m;
  for (const auto& p : pairs) m.add(static_cast<double>(p.f1 * p.f2));
  return m.estimate(EstimatorKind::coincidence);
}

CorrelationEstimate correlation_standard(std::span<const DetectionRecord> r1,
                                         std::span<const DetectionRecord> r2) {
  require_same_ticks(r1, r2);
  if (r1.empty()) throw EmptySampleError("no pairs measured");
  Moments m;
  for (std::size_t k = 0; k < r1.size(); ++k) m.add(static_cast<double>(r1[k].value * r2[k].value));
  return m.estimate(EstimatorKind::standard);
}

CorrelationEstimate correlation_weighted(std::span<const DetectionRecord> r1,
                                         std::span<const DetectionRecord> r2) {
  require_same_ticks(r1, r2);
  if (r1.empty()) throw EmptySampleError("no pairs measured");
  Moments m;
  for (std::size_t k = 0; k < r1.size(); ++k) {
    const double w = r1[k].weight * r2[k].weight;
    if (!(w >= 0.0)) throw InvalidArgument("negative event weight");
    m.add(w * r1[k].value * r2[k].value);
  }
  CorrelationEstimate e = m.estimate(EstimatorKind::weighted);
  e.value = std::clamp(e.value, -1.0, 1.0);
  return e;
}

double CoincidenceStats::frequency(int f1, int f2) const {
  if (total == 0) return 0.0;
  return static_cast<double>(counts[f1 < 0][f2 < 0]) / static_cast<double>(total);
}

double CoincidenceStats::side1_plus() const { return frequency(+1, +1) + frequency(+1, -1); }

CoincidenceStats coincidence_stats(std::span<const CoincidentPair> pairs) {
  CoincidenceStats st;
  for (const auto& p : pairs) ++st.counts[p.f1 < 0][p.f2 < 0];
  st.total = pairs.size();
  return st;
}

namespace {

DetectMode default_mode(const ExperimentConfig& cfg, Side side) {
  if (cfg.estimator == EstimatorKind::coincidence && side == cfg.weight_side) {
    return DetectMode::acceptance;
  }
  return DetectMode::always_detect;
}

DetectMode mode_of(const ExperimentConfig& cfg, Side side) {
  const auto& override = side == Side::one ? cfg.mode1 : cfg.mode2;
  return override.value_or(default_mode(cfg, side));
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  if (cfg.n == 0) throw InvalidArgument("experiment needs at least one pair");
  if (cfg.batch == 0) throw InvalidArgument("batch size must be positive");
  const DetectMode m1 = mode_of(cfg, Side::one);
  const DetectMode m2 = mode_of(cfg, Side::two);
  const int accepting = (m1 == DetectMode::acceptance) + (m2 == DetectMode::acceptance);
  if (cfg.estimator == EstimatorKind::coincidence) {
    if (accepting != 1) {
      throw InvalidArgument("coincidence runs need exactly one station in acceptance mode");
    }
    if (mode_of(cfg, cfg.weight_side) != DetectMode::acceptance) {
      throw InvalidArgument("the acceptance station must be the weight side");
    }
  } else if (accepting != 0) {
    throw InvalidArgument(std::string(to_string(cfg.estimator)) +
                          " estimator needs both stations to always detect");
  }
}

StationConfig station_config(const ExperimentConfig& cfg, Side side) {
  StationConfig s;
  s.side = side;
  s.setting = side == Side::one ? cfg.a : cfg.b;
  s.mode = mode_of(cfg, side);
  s.weight_side = cfg.weight_side;
  s.seed = side == Side::one ? cfg.seeds.station1 : cfg.seeds.station2;
  s.offset = cfg.offset;
  return s;
}

namespace {

using EmissionBatch = std::vector<EmissionRecord>;
using DetectionBatch = std::vector<DetectionRecord>;

// The source knows n and its seed; it never sees a setting.
void source_actor(std::size_t n, std::uint64_t seed, std::size_t batch,
                  Channel<EmissionBatch>& to1, Channel<EmissionBatch>& to2,
                  std::vector<EmissionRecord>* keep) {
  const CounterRng rng{seed};
  for (std::uint64_t start = 0; start < n; start += batch) {
    const std::uint64_t stop = std::min<std::uint64_t>(n, start + batch);
    EmissionBatch b;
    b.reserve(stop - start);
    for (std::uint64_t t = start; t < stop; ++t) b.push_back(emit(t, rng));
    if (keep) keep->insert(keep->end(), b.begin(), b.end());
    to1.send(b);
    to2.send(std::move(b));
  }
  to1.close();
  to2.close();
}

void station_actor(const StationConfig cfg, Channel<EmissionBatch>& in,
                   Channel<DetectionBatch>& out) {
  const CounterRng rng{cfg.seed};
  while (auto batch = in.receive()) {
    DetectionBatch d;
    d.reserve(batch->size());
    for (const auto& e : *batch) {
      if (auto r = detect(cfg, rng, e)) d.push_back(*r);
    }
    out.send(std::move(d));
  }
  out.close();
}

void collect(Channel<DetectionBatch>& in, std::vector<DetectionRecord>& out) {
  while (auto batch = in.receive()) out.insert(out.end(), batch->begin(), batch->end());
}

}  // namespace

ExperimentRun run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const StationConfig st1 = station_config(cfg, Side::one);
  const StationConfig st2 = station_config(cfg, Side::two);

  const std::size_t cap = cfg.scheduler == Scheduler::threaded ? cfg.channel_capacity : 0;
  Channel<EmissionBatch> src_to_1(cap), src_to_2(cap);
  Channel<DetectionBatch> st1_out(cap), st2_out(cap);

  ExperimentRun run;
  run.offset = cfg.offset;
  run.side1.reserve(cfg.n);
  run.side2.reserve(cfg.n);
  auto* keep = cfg.keep_emissions ? &run.emissions : nullptr;

  if (cfg.scheduler == Scheduler::threaded) {
    std::jthread source([&] { source_actor(cfg.n, cfg.seeds.source, cfg.batch, src_to_1, src_to_2, keep); });
    std::jthread station1([&] { station_actor(st1, src_to_1, st1_out); });
    std::jthread station2([&] { station_actor(st2, src_to_2, st2_out); });
    std::jthread collect2([&] { collect(st2_out, run.side2); });
    collect(st1_out, run.side1);
  } else {
    source_actor(cfg.n, cfg.seeds.source, cfg.batch, src_to_1, src_to_2, keep);
    station_actor(st1, src_to_1, st1_out);
    station_actor(st2, src_to_2, st2_out);
    collect(st1_out, run.side1);
    collect(st2_out, run.side2);
  }

  run.pairs = match_coincidences(run.side1, run.side2);

  ExperimentSummary& s = run.summary;
  s.a = cfg.a;
  s.b = cfg.b;
  s.n = cfg.n;
  s.detections1 = run.side1.size();
  s.detections2 = run.side2.size();
  s.coincidences = run.pairs.size();
  s.coincidence_rate = static_cast<double>(s.coincidences) / static_cast<double>(cfg.n);
  switch (cfg.estimator) {
    case EstimatorKind::coincidence: s.estimate = correlation_dp(run.pairs); break;
    case EstimatorKind::standard: s.estimate = correlation_standard(run.side1, run.side2); break;
    case EstimatorKind::weighted: s.estimate = correlation_weighted(run.side1, run.side2); break;
  }
  return run;
}

ChshRun run_chsh(const ExperimentConfig& base, const ChshSettings& settings) {
  const std::array<std::pair<Angle, Angle>, 4> pairs{{{settings.a, settings.b},
                                                      {settings.a, settings.b2},
                                                      {settings.a2, settings.b},
                                                      {settings.a2, settings.b2}}};
  ChshRun out;
  for (std::size_t k = 0; k < 4; ++k) {
    ExperimentConfig cfg = base;
    cfg.a = pairs[k].first;
    cfg.b = pairs[k].second;
    cfg.keep_emissions = false;
    out.runs[k] = run_experiment(cfg).summary;
  }
  out.value = chsh_value(out.runs[0].estimate.value, out.runs[1].estimate.value,
                         out.runs[2].estimate.value, out.runs[3].estimate.value);
  return out;
}

namespace {

nlohmann::ordered_json summary_json(const ExperimentSummary& s) {
  return {{"settings", {{"a", s.a.value()}, {"b", s.b.value()}}},
          {"n", s.n},
          {"detections", {{"side1", s.detections1}, {"side2", s.detections2}}},
          {"coincidences", s.coincidences},
          {"coincidence_rate", s.coincidence_rate},
          {"estimate",
           {{"kind", std::string(to_string(s.estimate.kind))},
            {"value", s.estimate.value},
            {"stderr", s.estimate.std_error},
            {"n", s.estimate.n}}}};
}

}  // namespace

void write_summary_json(std::ostream& out, const ExperimentSummary& summary) {
  out << summary_json(summary).dump(2) << '\n';
}

void write_chsh_json(std::ostream& out, const ChshRun& chsh) {
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& r : chsh.runs) runs.push_back(summary_json(r));
  nlohmann::ordered_json j{{"chsh", chsh.value}, {"runs", runs}};
  out << j.dump(2) << '\n';
}

void write_event_log(std::ostream& out, const ExperimentRun& run, bool debug_hidden) {
  if (debug_hidden && run.emissions.size() != run.summary.n) {
    throw InvalidArgument("hidden configurations were not kept for this run");
  }
  out << (debug_hidden ? "tick,side,s_hidden,value\n" : "tick,side,value\n");
  auto row = [&](const DetectionRecord& d, int side) {
    out << d.tick << ',' << side << ',';
    // Emission ticks are 0..n-1, so the emission behind tick t' is t' - offset.
    if (debug_hidden) out << fmt::format("{}", run.emissions[d.tick - run.offset].s.value()) << ',';
    out << d.value << '\n';
  };
  std::size_t i = 0, j = 0;
  while (i < run.side1.size() || j < run.side2.size()) {
    const bool take1 = j >= run.side2.size() ||
                       (i < run.side1.size() && run.side1[i].tick <= run.side2[j].tick);
    if (take1) {
      row(run.side1[i++], 1);
    } else {
      row(run.side2[j++], 2);
    }
  }
}

}  // namespace lcsim
