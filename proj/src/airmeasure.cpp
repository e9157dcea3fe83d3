#include "lcsim/airmeasure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include "json.hpp"

#include "lcsim/error.hpp"

namespace lcsim {

using nlohmann::json;

std::string_view to_string(BuiltinShape shape) {
  switch (shape) {
    case BuiltinShape::abs_cos: return "abs-cos";
    case BuiltinShape::cos_squared: return "cos-squared";
    case BuiltinShape::uniform: return "uniform";
  }
  return "?";
}

BuiltinShape builtin_shape_from_string(std::string_view name) {
  if (name == "abs-cos") return BuiltinShape::abs_cos;
  if (name == "cos-squared") return BuiltinShape::cos_squared;
  if (name == "uniform") return BuiltinShape::uniform;
  throw ValidationError("unknown builtin profile '" + std::string(name) + "'");
}

Profile Profile::builtin(BuiltinShape shape) {
  Profile p;
  p.shape_ = shape;
  return p;
}

Profile Profile::sampled(std::vector<double> samples) {
  if (samples.empty()) throw ValidationError("sampled profile needs at least one sample");
  for (double v : samples) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("profile samples must be finite and nonnegative");
    }
  }
  Profile p;
  p.samples_ = std::move(samples);
  return p;
}

double Profile::operator()(double x) const {
  if (samples_.empty()) {
    switch (shape_) {
      case BuiltinShape::abs_cos: return 0.5 * kPi * std::abs(std::cos(x));
      case BuiltinShape::cos_squared: {
        const double c = std::cos(x);
        return 2.0 * c * c;
      }
      case BuiltinShape::uniform: return 1.0;
    }
  }
  const auto n = samples_.size();
  const double u = normalize(x) / kTwoPi * static_cast<double>(n);
  auto k = static_cast<std::size_t>(u);
  if (k >= n) k = n - 1;
  const double frac = u - static_cast<double>(k);
  return (1.0 - frac) * samples_[k] + frac * samples_[(k + 1) % n];
}

std::vector<double> Profile::kinks() const {
  if (is_builtin() && shape_ == BuiltinShape::abs_cos) return {kPi / 2.0, 3.0 * kPi / 2.0};
  return {};
}

double CandidateModel::source_density(double s) const {
  return rho.is_builtin() ? rho(s) / kTwoPi : rho(s);
}

double CandidateModel::density(double s, Angle a, Angle b) const {
  return source_density(s) * p1(s - a.value()) * p2(s - b.value());
}

CandidateModel CandidateModel::abs_cos(Side weight_side) {
  return with_weight(BuiltinShape::abs_cos, weight_side);
}

CandidateModel CandidateModel::with_weight(BuiltinShape shape, Side weight_side) {
  CandidateModel m;
  if (weight_side == Side::one) {
    m.p1 = Profile::builtin(shape);
  } else {
    m.p2 = Profile::builtin(shape);
  }
  return m;
}

namespace {

Profile profile_from_json(const json& j, const char* field) {
  if (!j.contains(field)) throw ValidationError(std::string("candidate is missing '") + field + "'");
  const json& p = j.at(field);
  if (!p.is_object()) throw ValidationError(std::string("'") + field + "' must be an object");
  if (p.contains("builtin")) {
    if (!p["builtin"].is_string()) throw ValidationError("'builtin' must be a string");
    return Profile::builtin(builtin_shape_from_string(p["builtin"].get<std::string>()));
  }
  if (p.contains("samples")) {
    const json& s = p["samples"];
    if (!s.is_array()) throw ValidationError("'samples' must be an array");
    std::vector<double> values;
    values.reserve(s.size());
    for (const auto& v : s) {
      if (!v.is_number()) throw ValidationError("'samples' entries must be numbers");
      values.push_back(v.get<double>());
    }
    return Profile::sampled(std::move(values));
  }
  throw ValidationError(std::string("'") + field + "' needs 'builtin' or 'samples'");
}

json profile_to_json(const Profile& p) {
  if (p.is_builtin()) return {{"builtin", std::string(to_string(p.shape()))}};
  return {{"samples", p.samples()}};
}

}  // namespace

CandidateModel load_candidate(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("candidate is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("candidate must be a JSON object");
  CandidateModel m;
  m.rho = profile_from_json(j, "rho");
  m.p1 = profile_from_json(j, "p1");
  m.p2 = profile_from_json(j, "p2");
  return m;
}

CandidateModel load_candidate_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open candidate file '" + path + "'");
  return load_candidate(in);
}

void save_candidate(std::ostream& out, const CandidateModel& model) {
  json j{{"rho", profile_to_json(model.rho)},
         {"p1", profile_to_json(model.p1)},
         {"p2", profile_to_json(model.p2)}};
  out << j.dump(2) << '\n';
}

std::string_view to_string(Quadrant q) {
  switch (q) {
    case Quadrant::II: return "IxI";
    case Quadrant::IJ: return "IxJ";
    case Quadrant::JI: return "JxI";
    case Quadrant::JJ: return "JxJ";
  }
  return "?";
}

double QuadrantMasses::operator[](Quadrant q) const {
  switch (q) {
    case Quadrant::II: return ii;
    case Quadrant::IJ: return ij;
    case Quadrant::JI: return ji;
    case Quadrant::JJ: return jj;
  }
  return 0.0;
}

double air_density(Angle a, Angle s) { return 0.25 * std::abs(std::cos(s.value() - a.value())); }

double quadrant_prob_analytic(Angle a, Angle b, Quadrant q) {
  const double half = 0.5 * (b.value() - a.value());
  if (q == Quadrant::II || q == Quadrant::JJ) {
    const double c = std::cos(half);
    return 0.5 * c * c;
  }
  const double s = std::sin(half);
  return 0.5 * s * s;
}

QuadrantMasses quadrant_masses_analytic(Angle a, Angle b) {
  return {quadrant_prob_analytic(a, b, Quadrant::II), quadrant_prob_analytic(a, b, Quadrant::IJ),
          quadrant_prob_analytic(a, b, Quadrant::JI), quadrant_prob_analytic(a, b, Quadrant::JJ)};
}

namespace {

template <class F>
double midpoint_sum(const F& f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += f(lo + (i + 0.5) * h);
  return sum * h;
}

template <class F>
double integrate_interval(const F& f, double lo, double hi, const QuadratureOptions& opt) {
  switch (opt.rule) {
    case QuadratureRule::midpoint: return midpoint_sum(f, lo, hi, opt.panels);
    case QuadratureRule::midpoint_richardson:
      return (4.0 * midpoint_sum(f, lo, hi, 2 * opt.panels) - midpoint_sum(f, lo, hi, opt.panels)) /
             3.0;
  }
  return 0.0;
}

// Integrates the model density over one arc, split at every profile kink that
// falls strictly inside it.
double integrate_arc(const CandidateModel& m, Angle a, Angle b, const Arc& arc,
                     const QuadratureOptions& opt) {
  const double start = arc.start().value();
  const double len = arc.length();

  std::vector<double> cuts{0.0, len};
  auto add_kinks = [&](const Profile& p, double shift) {
    for (double k : p.kinks()) {
      const double off = normalize(k + shift - start);
      if (off > kArcEpsilon && off < len - kArcEpsilon) cuts.push_back(off);
    }
  };
  add_kinks(m.rho, 0.0);
  add_kinks(m.p1, a.value());
  add_kinks(m.p2, b.value());
  std::sort(cuts.begin(), cuts.end());

  auto f = [&](double t) { return m.density(start + t, a, b); };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] > kArcEpsilon) total += integrate_interval(f, cuts[i], cuts[i + 1], opt);
  }
  return total;
}

void check_panels(const QuadratureOptions& opt) {
  if (opt.panels < 8) throw InvalidArgument("quadrature needs at least 8 panels");
}

}  // namespace

double quadrant_prob_quadrature(const CandidateModel& m, Angle a, Angle b, Quadrant q,
                                const QuadratureOptions& opt) {
  check_panels(opt);
  const bool side1_upper = (q == Quadrant::II || q == Quadrant::IJ);
  const bool side2_upper = (q == Quadrant::II || q == Quadrant::JI);
  const Arc x = side1_upper ? Arc::upper(a) : Arc::lower(a);
  const Arc y = side2_upper ? Arc::upper(b) : Arc::lower(b);

  double total = 0.0;
  for (const Arc& piece : arc_intersect(x, y)) total += integrate_arc(m, a, b, piece, opt);
  return total;
}

QuadrantMasses quadrant_masses(const CandidateModel& m, Angle a, Angle b,
                               const QuadratureOptions& opt) {
  return {quadrant_prob_quadrature(m, a, b, Quadrant::II, opt),
          quadrant_prob_quadrature(m, a, b, Quadrant::IJ, opt),
          quadrant_prob_quadrature(m, a, b, Quadrant::JI, opt),
          quadrant_prob_quadrature(m, a, b, Quadrant::JJ, opt)};
}

double total_mass(const CandidateModel& m, Angle a, Angle b, const QuadratureOptions& opt) {
  check_panels(opt);
  return integrate_arc(m, a, b, Arc{Angle{0.0}, kTwoPi}, opt);
}

double correlation_from_masses(const QuadrantMasses& masses) {
  const double mass = masses.total();
  if (std::abs(mass - 1.0) > kNormalizationTolerance) {
    throw NormalizationError("correlation requires a normalized model", mass);
  }
  return masses.ij + masses.ji - masses.ii - masses.jj;
}

double correlation(const CandidateModel& m, Angle a, Angle b, const QuadratureOptions& opt) {
  return correlation_from_masses(quadrant_masses(m, a, b, opt));
}

double correlation_analytic(Angle a, Angle b) {
  return correlation_from_masses(quadrant_masses_analytic(a, b));
}

ChshSettings ChshSettings::tsirelson() {
  return {Angle{0.0}, Angle{kPi / 2.0}, Angle{kPi / 4.0}, Angle{3.0 * kPi / 4.0}};
}

double chsh_value(double c_ab, double c_ab2, double c_a2b, double c_a2b2) {
  return std::abs(c_ab - c_ab2) + std::abs(c_a2b + c_a2b2);
}

double chsh(const CandidateModel& m, const ChshSettings& s, const QuadratureOptions& opt) {
  return chsh_value(correlation(m, s.a, s.b, opt), correlation(m, s.a, s.b2, opt),
                    correlation(m, s.a2, s.b, opt), correlation(m, s.a2, s.b2, opt));
}

double chsh_analytic(const ChshSettings& s) {
  return chsh_value(correlation_analytic(s.a, s.b), correlation_analytic(s.a, s.b2),
                    correlation_analytic(s.a2, s.b), correlation_analytic(s.a2, s.b2));
}

bool empirically_equivalent(const CandidateModel& m1, Angle a1, Angle b1,
                            const CandidateModel& m2, Angle a2, Angle b2, double tol,
                            const QuadratureOptions& opt) {
  const QuadrantMasses r1 = quadrant_masses(m1, a1, b1, opt);
  const QuadrantMasses r2 = quadrant_masses(m2, a2, b2, opt);
  for (const auto& r : {r1, r2}) {
    if (std::abs(r.total() - 1.0) > kNormalizationTolerance) {
      throw NormalizationError("empirical equivalence requires normalized models", r.total());
    }
  }
  for (Quadrant q : kQuadrants) {
    if (!(std::abs(r1[q] - r2[q]) <= tol)) return false;
  }
  return true;
}

}  // namespace lcsim
