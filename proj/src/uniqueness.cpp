#include "lcsim/uniqueness.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <ostream>

#include "json.hpp"
#include "lcsim/error.hpp"

namespace lcsim {

ReproductionCheck check_reproduction(const CandidateModel& m, int grid, double tol,
                                     const QuadratureOptions& opt) {
  if (grid < 8) throw InvalidArgument("reproduction grid must be at least 8 x 8");
  const double mass = total_mass(m, Angle{}, Angle{}, opt);
  if (std::abs(mass - 1.0) > kNormalizationTolerance) {
    throw NormalizationError("candidate is not normalized", mass);
  }

  ReproductionCheck out;
  for (int i = 0; i < grid; ++i) {
    const Angle a{kTwoPi * i / grid};
    for (int j = 0; j < grid; ++j) {
      const Angle b{kTwoPi * j / grid};
      for (Quadrant q : kQuadrants) {
        const double err =
            std::abs(quadrant_prob_quadrature(m, a, b, q, opt) - quadrant_prob_analytic(a, b, q));
        if (err > out.max_error) {
          out.max_error = err;
          out.worst = {a, b, q};
        }
      }
    }
  }
  out.reproduces = out.max_error <= tol;
  return out;
}

Side infer_weight_side(const CandidateModel& m) {
  return std::abs(m.p1(kPi / 2.0)) <= std::abs(m.p2(-kPi / 2.0)) ? Side::one : Side::two;
}

namespace {

constexpr int kConditionGrid = 1024;

struct Spread {
  double mean = 0.0;
  double relative = 0.0;
};

template <class F>
Spread spread_of(const F& f) {
  double lo = f(0.0), hi = lo, sum = 0.0;
  for (int k = 0; k < kConditionGrid; ++k) {
    const double v = f(kTwoPi * k / kConditionGrid);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  Spread s;
  s.mean = sum / kConditionGrid;
  s.relative = s.mean > 0.0 ? (hi - lo) / s.mean : (hi - lo);
  return s;
}

ConditionResult condition(std::string name, double residual, double tol) {
  return {std::move(name), residual <= tol, residual};
}

}  // namespace

std::vector<ConditionResult> check_necessary_conditions(const CandidateModel& m, double tol,
                                                        std::optional<Side> weight_side) {
  const Side side = weight_side.value_or(infer_weight_side(m));
  const Profile& weighted = side == Side::one ? m.p1 : m.p2;
  const Profile& flat = side == Side::one ? m.p2 : m.p1;
  const std::string wname = side == Side::one ? "p1" : "p2";
  const std::string fname = side == Side::one ? "p2" : "p1";

  std::vector<ConditionResult> out;
  out.push_back(condition("p1(pi/2)*p2(-pi/2) = 0",
                          std::abs(m.p1(kPi / 2.0) * m.p2(-kPi / 2.0)), tol));

  const Spread rho = spread_of([&](double s) { return m.source_density(s); });
  out.push_back(condition("rho constant", rho.relative, tol));

  const Spread unweighted = spread_of([&](double x) { return flat(x); });
  out.push_back(condition(fname + " constant", unweighted.relative, tol));

  // Side 1 vanishes at +pi/2 by the first condition and must also vanish at
  // -pi/2; the mirrored branch swaps the two ends.
  const double other_end = side == Side::one ? -kPi / 2.0 : kPi / 2.0;
  out.push_back(condition(wname + (side == Side::one ? "(-pi/2) = 0" : "(pi/2) = 0"),
                          std::abs(weighted(other_end)), tol));

  double profile_err = 0.0;
  for (int k = 0; k < kConditionGrid; ++k) {
    const double x = kTwoPi * k / kConditionGrid;
    const double combined = rho.mean * weighted(x) * unweighted.mean;
    profile_err = std::max(profile_err, std::abs(combined - 0.25 * std::abs(std::cos(x))));
  }
  out.push_back(condition("rho*" + wname + "*" + fname + " = |cos|/4", profile_err, tol));
  return out;
}

ReconstructedProfile reconstruct_profile(const UpperMassFn& upper_mass, double h, int samples,
                                         Angle base) {
  if (!(h > 0.0) || h > kMaxDifferenceStep) {
    throw InvalidArgument(fmt::format(
        "difference step {} cannot resolve the kink neighborhoods; need 0 < h <= {}", h,
        kMaxDifferenceStep));
  }
  if (samples < 2) throw InvalidArgument("reconstruction needs at least 2 samples");

  ReconstructedProfile out;
  out.h = h;
  out.exclusion = h;
  out.x.resize(samples);
  out.values.resize(samples);
  for (int k = 0; k < samples; ++k) {
    const double x = -kPi / 2.0 + kPi * k / (samples - 1);
    const double d = x + kPi / 2.0;
    const double plus = upper_mass(base, base + (d + h));
    const double minus = upper_mass(base, base + (d - h));
    out.x[k] = x;
    out.values[k] = -(plus - minus) / (2.0 * h);
    if (kPi / 2.0 - std::abs(x) > out.exclusion) {
      out.sup_error = std::max(out.sup_error, std::abs(out.values[k] - 0.25 * std::cos(x)));
    }
  }
  return out;
}

ReconstructedProfile reconstruct_profile(const CandidateModel& m, double h, int samples,
                                         Angle base, const QuadratureOptions& opt) {
  for (const Profile* p : {&m.rho, &m.p1, &m.p2}) {
    if (!p->is_builtin() && p->samples().size() < static_cast<std::size_t>(kMinReconstructionSamples)) {
      throw InvalidArgument(fmt::format(
          "sampled profile has {} nodes; reconstruction needs at least {}", p->samples().size(),
          kMinReconstructionSamples));
    }
  }
  return reconstruct_profile(
      [&](Angle a, Angle b) { return quadrant_prob_quadrature(m, a, b, Quadrant::II, opt); }, h,
      samples, base);
}

UniquenessReport verify_reproduction(const CandidateModel& m, const UniquenessOptions& opt) {
  const ReproductionCheck check = check_reproduction(m, opt.grid, opt.tol, opt.quadrature);
  UniquenessReport r;
  r.reproduces = check.reproduces;
  r.max_quadrant_error = check.max_error;
  r.worst = check.worst;
  r.total_mass = total_mass(m, Angle{}, Angle{}, opt.quadrature);
  r.weight_side = opt.weight_side.value_or(infer_weight_side(m));
  r.necessary_conditions = check_necessary_conditions(m, opt.condition_tol, r.weight_side);
  try {
    r.reconstructed = reconstruct_profile(m, opt.h, opt.samples, Angle{}, opt.quadrature);
  } catch (const InvalidArgument& e) {
    r.reconstruction_note = e.what();
  }
  return r;
}

void write_report_json(std::ostream& out, const UniquenessReport& report) {
  using nlohmann::json;
  json conditions = json::array();
  for (const auto& c : report.necessary_conditions) {
    conditions.push_back({{"name", c.name}, {"holds", c.holds}, {"residual", c.residual}});
  }
  json j{{"reproduces", report.reproduces},
         {"max_quadrant_error", report.max_quadrant_error},
         {"worst_setting",
          {{"a", report.worst.a.value()},
           {"b", report.worst.b.value()},
           {"quadrant", std::string(to_string(report.worst.quadrant))}}},
         {"total_mass", report.total_mass},
         {"weight_side", static_cast<int>(report.weight_side)},
         {"necessary_conditions", conditions},
         {"necessary_conditions_note", "necessary, not sufficient"}};
  if (report.reconstructed) {
    const auto& p = *report.reconstructed;
    j["reconstructed_profile"] = {{"h", p.h},
                                  {"x", p.x},
                                  {"values", p.values},
                                  {"sup_error", p.sup_error},
                                  {"exclusion", p.exclusion}};
  } else {
    j["reconstructed_profile"] = nullptr;
    j["reconstruction_note"] = report.reconstruction_note;
  }
  out << j.dump(2) << '\n';
}

void write_report_table(std::ostream& out, const UniquenessReport& report) {
  out << fmt::format("reproduces singlet statistics : {}\n", report.reproduces ? "yes" : "no");
  out << fmt::format("max quadrant error            : {:.6e} at a={:.6f} b={:.6f} {}\n",
                     report.max_quadrant_error, report.worst.a.value(), report.worst.b.value(),
                     to_string(report.worst.quadrant));
  out << fmt::format("total mass                    : {:.12f}\n", report.total_mass);
  out << fmt::format("weight side                   : {}\n", static_cast<int>(report.weight_side));
  out << "necessary conditions (necessary, not sufficient):\n";
  for (const auto& c : report.necessary_conditions) {
    out << fmt::format("  {:<28} {:<5} residual {:.3e}\n", c.name, c.holds ? "holds" : "FAILS",
                       c.residual);
  }
  if (report.reconstructed) {
    out << fmt::format("reconstructed profile         : sup error {:.3e} vs cos/4 (h={})\n",
                       report.reconstructed->sup_error, report.reconstructed->h);
  } else {
    out << "reconstructed profile         : skipped (" << report.reconstruction_note << ")\n";
  }
}

}  // namespace lcsim
