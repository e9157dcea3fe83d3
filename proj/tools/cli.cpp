#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "lcsim/airmeasure.hpp"
#include "lcsim/error.hpp"
#include "lcsim/lcspace.hpp"
#include "lcsim/protocol.hpp"
#include "lcsim/uniqueness.hpp"

namespace lcsim::cli {
namespace {

using nlohmann::ordered_json;

struct AngleFlags {
  double a = 0.0, a2 = kPi / 2.0, b = 0.0, b2 = 3.0 * kPi / 4.0;
  bool degrees = false;

  Angle get(double v) const { return degrees ? Angle::from_degrees(v) : Angle{v}; }
};

// Output goes to --out when given, otherwise to the command's stream.
class Sink {
public:
  Sink(const std::string& path, std::ostream& fallback) : out_{&fallback} {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw IoError("cannot open '" + path + "' for writing");
      out_ = file_.get();
    }
  }
  std::ostream& stream() { return *out_; }

private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_;
};

std::string fixed(double v) { return fmt::format("{:.12f}", v); }

int cmd_analytic(const AngleFlags& f, bool as_json, std::ostream& out) {
  const Angle a = f.get(f.a), b = f.get(f.b);
  const QuadrantMasses m = quadrant_masses_analytic(a, b);
  const double c = correlation_from_masses(m);
  if (as_json) {
    ordered_json j{{"settings", {{"a", a.value()}, {"b", b.value()}}},
                   {"quadrants", {{"IxI", m.ii}, {"IxJ", m.ij}, {"JxI", m.ji}, {"JxJ", m.jj}}},
                   {"sum", m.total()},
                   {"correlation", c}};
    out << j.dump(2) << '\n';
    return kOk;
  }
  out << fmt::format("a = {:.12f}  b = {:.12f}\n", a.value(), b.value());
  for (Quadrant q : kQuadrants) out << fmt::format("{:<6} {}\n", to_string(q), fixed(m[q]));
  out << fmt::format("{:<6} {}\n", "sum", fixed(m.total()));
  out << fmt::format("{:<6} {}\n", "C(a,b)", fixed(c));
  return kOk;
}

struct ScanFlags {
  int grid = 8;
  std::size_t pairs = 20000;
  std::uint64_t seed = 7;
  std::string out;
};

int cmd_scan(const ScanFlags& f, std::ostream& out) {
  Sink sink(f.out, out);
  std::ostream& os = sink.stream();
  os << "a,b,C_analytic,C_mc\n";
  for (int i = 0; i < f.grid; ++i) {
    for (int j = 0; j < f.grid; ++j) {
      const Angle a{kTwoPi * i / f.grid}, b{kTwoPi * j / f.grid};
      ExperimentConfig cfg;
      cfg.n = f.pairs;
      cfg.seeds = Seeds::from_base(f.seed);
      cfg.a = a;
      cfg.b = b;
      const double mc = run_experiment(cfg).summary.estimate.value;
      os << fmt::format("{},{},{},{}\n", a.value(), b.value(), correlation_analytic(a, b), mc);
    }
  }
  return kOk;
}

struct SimulateFlags {
  std::size_t pairs = 1'000'000;
  std::uint64_t seed = 7;
  std::optional<std::uint64_t> seed_source, seed1, seed2;
  std::string mode = "coincidence";
  int weight_side = 1;
  std::uint64_t offset = 1;
  bool threaded = false;
  bool chsh = false;
  std::string events;
  bool debug_hidden = false;
  std::string out;
};

int cmd_simulate(const AngleFlags& angles, const SimulateFlags& f, std::ostream& out) {
  ExperimentConfig cfg;
  cfg.n = f.pairs;
  cfg.seeds = Seeds::from_base(f.seed);
  if (f.seed_source) cfg.seeds.source = *f.seed_source;
  if (f.seed1) cfg.seeds.station1 = *f.seed1;
  if (f.seed2) cfg.seeds.station2 = *f.seed2;
  cfg.estimator = estimator_kind_from_string(f.mode);
  cfg.weight_side = f.weight_side == 2 ? Side::two : Side::one;
  cfg.offset = f.offset;
  cfg.scheduler = f.threaded ? Scheduler::threaded : Scheduler::sequential;
  cfg.a = angles.get(angles.a);
  cfg.b = angles.get(angles.b);

  Sink sink(f.out, out);
  if (f.chsh) {
    const ChshSettings s{cfg.a, angles.get(angles.a2), cfg.b, angles.get(angles.b2)};
    write_chsh_json(sink.stream(), run_chsh(cfg, s));
    return kOk;
  }
  cfg.keep_emissions = f.debug_hidden;
  const ExperimentRun run = run_experiment(cfg);
  write_summary_json(sink.stream(), run.summary);
  if (!f.events.empty()) {
    std::ofstream log(f.events);
    if (!log) throw IoError("cannot open '" + f.events + "' for writing");
    write_event_log(log, run, f.debug_hidden);
  }
  return kOk;
}

struct UniquenessFlags {
  std::string candidate;
  std::string builtin;
  int weight_side = 0;
  UniquenessOptions opt;
  int panels = 4096;
  bool table = false;
  std::string out;
};

int cmd_uniqueness(UniquenessFlags f, std::ostream& out) {
  const Side side = f.weight_side == 2 ? Side::two : Side::one;
  const CandidateModel model =
      f.candidate.empty() ? CandidateModel::with_weight(builtin_shape_from_string(f.builtin), side)
                          : load_candidate_file(f.candidate);
  if (f.weight_side != 0) f.opt.weight_side = side;
  f.opt.quadrature.panels = f.panels;
  const UniquenessReport report = verify_reproduction(model, f.opt);
  Sink sink(f.out, out);
  if (f.table) {
    write_report_table(sink.stream(), report);
  } else {
    write_report_json(sink.stream(), report);
  }
  return kOk;
}

struct TrivialFlags {
  std::string measure;
  std::size_t random = 0;
  std::uint64_t seed = 7;
  double tol = 1e-9;
  std::size_t grid = 64;
  std::size_t apparatus = 8;
  std::string export_abs_cos;
  std::string out;
};

ordered_json verdict_json(const TrivialityVerdict& v) {
  ordered_json j{{"trivial", v.trivial}, {"max_deviation", v.max_deviation}};
  j["c"] = v.c ? ordered_json(*v.c) : ordered_json(nullptr);
  return j;
}

int trivial_random(const TrivialFlags& f, std::ostream& os) {
  std::mt19937_64 rng(f.seed);
  const LcDims dims{f.grid, f.grid, f.apparatus, f.apparatus};
  std::size_t violations = 0, nontrivial = 0;
  double max_chsh = 0.0;
  for (std::size_t k = 0; k < f.random; ++k) {
    const LcFamily fam = random_trivial_family(rng, dims);
    const ObservableQuadruple obs = random_observables(rng, dims);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) nontrivial += !is_trivial(fam.measure(i, j), f.tol).trivial;
    }
    const double value = chsh_discrete(fam, obs);
    max_chsh = std::max(max_chsh, value);
    violations += value > 2.0 + f.tol;
  }
  ordered_json j{{"random", f.random},     {"seed", f.seed},           {"tolerance", f.tol},
                 {"nontrivial_measures", nontrivial}, {"max_chsh", max_chsh},
                 {"violations", violations}};
  os << j.dump(2) << '\n';
  return violations == 0 && nontrivial == 0 ? kOk : kStatistical;
}

int trivial_file(const TrivialFlags& f, std::ostream& os) {
  std::ifstream in(f.measure);
  if (!in) throw IoError("cannot open measure file '" + f.measure + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  bool is_family = false;
  try {
    is_family = nlohmann::json::parse(buf.str()).contains("observables");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("measure file is not valid JSON: ") + e.what());
  }
  buf.seekg(0);
  if (!is_family) {
    const DiscreteLCMeasure m = load_measure(buf);
    os << ordered_json{{"verdict", verdict_json(is_trivial(m, f.tol))}}.dump(2) << '\n';
    return kOk;
  }
  const FamilyDocument doc = load_family(buf);
  ordered_json verdicts = ordered_json::array();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) verdicts.push_back(verdict_json(is_trivial(doc.family.measure(i, j), f.tol)));
  }
  ordered_json j{{"verdicts", verdicts}, {"chsh", chsh_discrete(doc.family, doc.observables)}};
  os << j.dump(2) << '\n';
  return kOk;
}

int cmd_trivial(const AngleFlags& angles, const TrivialFlags& f, std::ostream& out) {
  Sink sink(f.out, out);
  if (!f.export_abs_cos.empty()) {
    const ChshSettings s{angles.get(angles.a), angles.get(angles.a2), angles.get(angles.b),
                         angles.get(angles.b2)};
    const DiscretizedAir air = discretize_abs_cos(s, f.grid, f.apparatus);
    std::ofstream file(f.export_abs_cos);
    if (!file) throw IoError("cannot open '" + f.export_abs_cos + "' for writing");
    save_family(file, air.family, air.observables);
    return kOk;
  }
  if (!f.measure.empty()) return trivial_file(f, sink.stream());
  return trivial_random(f, sink.stream());
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Local-causal EPR-Bohm models: closed forms, quadrature, triviality checks and a "
               "three-actor coincidence simulation."};
  app.require_subcommand(1);

  AngleFlags angles;
  auto add_degrees = [&](CLI::App* cmd) {
    cmd->add_flag("--degrees", angles.degrees, "Read angles in degrees instead of radians");
  };

  bool analytic_json = false;
  auto* analytic = app.add_subcommand("analytic", "Singlet quadrant table and correlation");
  analytic->add_option("--a", angles.a, "Side-1 setting (radians)");
  analytic->add_option("--b", angles.b, "Side-2 setting (radians)");
  analytic->add_flag("--json", analytic_json, "Emit JSON instead of a table");
  add_degrees(analytic);

  ScanFlags scan_flags;
  auto* scan = app.add_subcommand("scan", "CSV of analytic and Monte-Carlo correlations on a K x K grid");
  scan->add_option("--grid", scan_flags.grid, "Grid size K")->check(CLI::PositiveNumber);
  scan->add_option("--pairs", scan_flags.pairs, "Pairs per grid point")->check(CLI::PositiveNumber);
  scan->add_option("--seed", scan_flags.seed, "Base seed");
  scan->add_option("--out", scan_flags.out, "Write CSV here instead of stdout");

  SimulateFlags sim;
  bool tsirelson = false;
  auto* simulate = app.add_subcommand("simulate", "Run the source/station/matcher protocol");
  simulate->add_option("--pairs", sim.pairs, "Number of emitted pairs")->check(CLI::PositiveNumber);
  simulate->add_option("--a", angles.a, "Side-1 setting");
  simulate->add_option("--b", angles.b, "Side-2 setting");
  simulate->add_option("--a2", angles.a2, "Second side-1 setting for --chsh");
  simulate->add_option("--b2", angles.b2, "Second side-2 setting for --chsh");
  simulate->add_option("--seed", sim.seed, "Base seed: source = seed, stations = seed+1, seed+2");
  simulate->add_option("--seed-source", sim.seed_source, "Source seed");
  simulate->add_option("--seed-1", sim.seed1, "Station 1 seed");
  simulate->add_option("--seed-2", sim.seed2, "Station 2 seed");
  simulate->add_option("--mode", sim.mode, "Estimator")
      ->check(CLI::IsMember({"coincidence", "weighted", "standard"}));
  simulate->add_option("--weight-side", sim.weight_side, "Station carrying the |cos| weight")
      ->check(CLI::IsMember({1, 2}));
  simulate->add_option("--offset", sim.offset, "Measurement delay T in ticks");
  simulate->add_flag("--threaded", sim.threaded, "Run each actor on its own thread");
  simulate->add_flag("--chsh", sim.chsh, "Run the four CHSH setting pairs");
  simulate->add_flag("--tsirelson", tsirelson, "Use settings (0, pi/2, pi/4, 3pi/4); implies --chsh");
  simulate->add_option("--events", sim.events, "Write the per-event CSV log here");
  simulate->add_flag("--debug-hidden", sim.debug_hidden, "Include hidden configurations in the log");
  simulate->add_option("--out", sim.out, "Write JSON here instead of stdout");
  add_degrees(simulate);

  UniquenessFlags uq;
  auto* uniqueness = app.add_subcommand("uniqueness", "Test a candidate against the singlet statistics");
  uniqueness->set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
  auto* cand_opt = uniqueness->add_option("--candidate", uq.candidate, "Candidate model JSON file");
  auto* builtin_opt = uniqueness->add_option("--builtin", uq.builtin, "Builtin weight profile")
                          ->check(CLI::IsMember({"abs-cos", "cos-squared", "uniform"}));
  cand_opt->excludes(builtin_opt);
  uniqueness->add_option("--weight-side", uq.weight_side, "Proof branch (1 or 2); inferred if omitted")
      ->check(CLI::IsMember({1, 2}));
  uniqueness->add_option("--grid", uq.opt.grid, "Setting grid K")->check(CLI::Range(8, 4096));
  uniqueness->add_option("--tol", uq.opt.tol, "Reproduction tolerance")->check(CLI::PositiveNumber);
  uniqueness->add_option("--h", uq.opt.h, "Finite-difference step")->check(CLI::PositiveNumber);
  uniqueness->add_option("--samples", uq.opt.samples, "Reconstruction samples")->check(CLI::Range(2, 100000));
  uniqueness->add_option("--panels", uq.panels, "Quadrature panels")->check(CLI::Range(8, 1 << 22));
  uniqueness->add_flag("--table", uq.table, "Print a summary table instead of JSON");
  uniqueness->add_option("--out", uq.out, "Write the report here instead of stdout");

  TrivialFlags tv;
  auto* trivial = app.add_subcommand("trivial", "Triviality verdicts and CHSH sweeps for discrete LC measures");
  auto* measure_opt = trivial->add_option("--measure", tv.measure, "Measure or family JSON file");
  auto* random_opt = trivial->add_option("--random", tv.random, "Number of random trivial families")
                         ->check(CLI::PositiveNumber);
  auto* export_opt = trivial->add_option("--export-abs-cos", tv.export_abs_cos,
                                         "Write a discretized |cos| family file and exit");
  measure_opt->excludes(random_opt)->excludes(export_opt);
  random_opt->excludes(export_opt);
  trivial->add_option("--seed", tv.seed, "Generator seed");
  trivial->add_option("--tol", tv.tol, "Triviality and CHSH tolerance")->check(CLI::PositiveNumber);
  trivial->add_option("--grid", tv.grid, "|S1| = |S2|")->check(CLI::PositiveNumber);
  trivial->add_option("--apparatus", tv.apparatus, "|M1| = |M2|")->check(CLI::PositiveNumber);
  trivial->add_option("--a", angles.a, "Export setting a");
  trivial->add_option("--a2", angles.a2, "Export setting a'");
  trivial->add_option("--b", angles.b, "Export setting b");
  trivial->add_option("--b2", angles.b2, "Export setting b'");
  trivial->add_option("--out", tv.out, "Write JSON here instead of stdout");

  bool trivial_b_set = false;
  try {
    app.parse(argc, argv);
    trivial_b_set = trivial->count("--b") > 0;
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*analytic) return cmd_analytic(angles, analytic_json, out);
    if (*scan) return cmd_scan(scan_flags, out);
    if (*simulate) {
      if (tsirelson) {
        sim.chsh = true;
        angles = AngleFlags{0.0, kPi / 2.0, kPi / 4.0, 3.0 * kPi / 4.0, false};
      } else if (sim.chsh && simulate->count("--b") == 0) {
        angles.b = kPi / 4.0;
      }
      return cmd_simulate(angles, sim, out);
    }
    if (*uniqueness) {
      if (uq.candidate.empty() && uq.builtin.empty()) {
        err << "usage error: uniqueness needs --candidate or --builtin\n";
        return kUsage;
      }
      return cmd_uniqueness(uq, out);
    }
    if (*trivial) {
      if (tv.measure.empty() && tv.random == 0 && tv.export_abs_cos.empty()) {
        err << "usage error: trivial needs --measure, --random or --export-abs-cos\n";
        return kUsage;
      }
      if (!trivial_b_set) angles.b = kPi / 4.0;
      return cmd_trivial(angles, tv, out);
    }
  } catch (const EmptySampleError& e) {
    err << "statistical failure: " << e.what() << '\n';
    return kStatistical;
  } catch (const InvalidArgument& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kValidation;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidation;
  }
  return kUsage;
}

}  // namespace lcsim::cli
