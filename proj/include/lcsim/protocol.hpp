#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lcsim/airmeasure.hpp"
#include "lcsim/circle.hpp"
#include "lcsim/rng.hpp"

namespace lcsim {

/// A pair leaves the source at `tick` with the shared configuration `s`.
struct EmissionRecord {
  std::uint64_t tick = 0;
  Angle s;

  bool operator==(const EmissionRecord&) const = default;
};

enum class DetectMode { always_detect, acceptance };

struct StationConfig {
  Side side = Side::one;
  Angle setting;
  DetectMode mode = DetectMode::always_detect;
  /// The station that carries the |cos| weight, as an acceptance window or,
  /// when always detecting, as a recorded importance weight.
  Side weight_side = Side::one;
  std::uint64_t seed = 0;
  /// Measurement happens at t' = t + offset.
  std::uint64_t offset = 1;
};

struct DetectionRecord {
  std::uint64_t tick = 0;
  int value = 0;
  double weight = 1.0;

  bool operator==(const DetectionRecord&) const = default;
};

struct CoincidentPair {
  int f1 = 0;
  int f2 = 0;
  double weight = 1.0;
};

enum class EstimatorKind { standard, weighted, coincidence };

std::string_view to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(std::string_view name);

struct CorrelationEstimate {
  double value = 0.0;
  std::size_t n = 0;
  double std_error = 0.0;  ///< sample std of per-event products / sqrt(n)
  EstimatorKind kind = EstimatorKind::coincidence;
};

/// n pairs at ticks 0..n-1, s uniform on the circle. Depends on (n, seed) only.
std::vector<EmissionRecord> run_source(std::size_t n, std::uint64_t seed);
EmissionRecord emit(std::uint64_t tick, const CounterRng& rng);

/// One station's local response to one emission. Acceptance mode detects with
/// probability |cos(s - setting)| using the station's own generator at the
/// emission tick; absence of a record means the particle left the window.
std::optional<DetectionRecord> detect(const StationConfig& cfg, const CounterRng& rng,
                                      const EmissionRecord& e);
std::vector<DetectionRecord> run_station(const StationConfig& cfg,
                                         std::span<const EmissionRecord> emissions);

/// Value pairs at the ticks present in both lists, in tick order. Each list
/// must have strictly increasing ticks.
std::vector<CoincidentPair> match_coincidences(std::span<const DetectionRecord> r1,
                                               std::span<const DetectionRecord> r2);

/// Mean product over coincidences. Throws EmptySampleError on zero overlap.
CorrelationEstimate correlation_dp(std::span<const CoincidentPair> pairs);

/// Mean product over all N pairs; both lists must cover the same ticks.
CorrelationEstimate correlation_standard(std::span<const DetectionRecord> r1,
                                         std::span<const DetectionRecord> r2);

/// Mean of w f1 f2 over all N pairs with the recorded local weights. The
/// value is clipped to [-1, 1]; the standard error is not.
CorrelationEstimate correlation_weighted(std::span<const DetectionRecord> r1,
                                         std::span<const DetectionRecord> r2);

/// Counts of (f1, f2) among coincidences, indexed [f1 == -1][f2 == -1].
struct CoincidenceStats {
  std::array<std::array<std::size_t, 2>, 2> counts{};
  std::size_t total = 0;

  double frequency(int f1, int f2) const;
  double side1_plus() const;
};
CoincidenceStats coincidence_stats(std::span<const CoincidentPair> pairs);

enum class Scheduler { sequential, threaded };

struct Seeds {
  std::uint64_t source = 7;
  std::uint64_t station1 = 8;
  std::uint64_t station2 = 9;

  /// source = base, stations = base + 1, base + 2.
  static Seeds from_base(std::uint64_t base) { return {base, base + 1, base + 2}; }
};

struct ExperimentConfig {
  std::size_t n = 1'000'000;
  Seeds seeds;
  Angle a;
  Angle b;
  EstimatorKind estimator = EstimatorKind::coincidence;
  Side weight_side = Side::one;
  std::uint64_t offset = 1;
  /// Per-station overrides; by default the weight side runs acceptance for
  /// the coincidence estimator and both stations always detect otherwise.
  std::optional<DetectMode> mode1;
  std::optional<DetectMode> mode2;
  Scheduler scheduler = Scheduler::sequential;
  std::size_t batch = 4096;
  std::size_t channel_capacity = 8;
  bool keep_emissions = false;
};

/// Throws InvalidArgument for n == 0, a zero batch, or station modes that break
/// the one-acceptance-side rule.
void validate(const ExperimentConfig& cfg);
StationConfig station_config(const ExperimentConfig& cfg, Side side);

struct ExperimentSummary {
  Angle a;
  Angle b;
  std::size_t n = 0;
  std::size_t detections1 = 0;
  std::size_t detections2 = 0;
  std::size_t coincidences = 0;
  double coincidence_rate = 0.0;
  CorrelationEstimate estimate;
};

struct ExperimentRun {
  ExperimentSummary summary;
  std::vector<DetectionRecord> side1;
  std::vector<DetectionRecord> side2;
  std::vector<CoincidentPair> pairs;
  std::vector<EmissionRecord> emissions;  ///< only with keep_emissions
  std::uint64_t offset = 1;
};

/// Source, two stations and the collector as separate actors joined only by
/// one-way channels; each station sees its own setting and nothing else.
ExperimentRun run_experiment(const ExperimentConfig& cfg);

struct ChshRun {
  std::array<ExperimentSummary, 4> runs;  ///< (a,b), (a,b'), (a',b), (a',b')
  double value = 0.0;
};
ChshRun run_chsh(const ExperimentConfig& base, const ChshSettings& settings);

void write_summary_json(std::ostream& out, const ExperimentSummary& summary);
void write_chsh_json(std::ostream& out, const ChshRun& chsh);

/// CSV event log `tick,side,value`, or `tick,side,s_hidden,value` when
/// debug_hidden is set (requires the run to have kept its emissions).
void write_event_log(std::ostream& out, const ExperimentRun& run, bool debug_hidden);

}  // namespace lcsim
