#include "lcsim/lcspace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "json.hpp"
#include "lcsim/error.hpp"

namespace lcsim {

using nlohmann::json;

double Matrix::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

namespace {

void require_nonnegative(const Matrix& m, const char* name) {
  for (double v : m.data()) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError(std::string(name) + " has a negative or non-finite entry");
    }
  }
}

std::vector<double> row_sums(const Matrix& m) {
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (double v : m.row(r)) out[r] += v;
  }
  return out;
}

void require_size(std::span<const double> v, std::size_t n, const char* name) {
  if (v.size() != n) {
    throw InvalidArgument(std::string(name) + " has " + std::to_string(v.size()) +
                          " entries, expected " + std::to_string(n));
  }
}

void require_observable(std::span<const double> v, const char* name) {
  for (double x : v) {
    if (!(x >= -1.0 && x <= 1.0)) {
      throw InvalidArgument(std::string(name) + " entries must lie in [-1, 1]");
    }
  }
}

}  // namespace

void DiscreteLCMeasure::validate(double mass_tol) const {
  if (n1() == 0 || n2() == 0) throw ValidationError("P_S must be non-empty");
  if (k1.rows() != n1()) throw ValidationError("K1 must have one row per S1 configuration");
  if (k2.rows() != n2()) throw ValidationError("K2 must have one row per S2 configuration");
  if (m1() == 0 || m2() == 0) throw ValidationError("apparatus spaces must be non-empty");
  require_nonnegative(ps, "PS");
  require_nonnegative(k1, "K1");
  require_nonnegative(k2, "K2");
  if (std::abs(ps.sum() - 1.0) > mass_tol) {
    throw NormalizationError("PS must be a probability matrix", ps.sum());
  }
}

double DiscreteLCMeasure::induced_mass(std::size_t s1, std::size_t s2, std::size_t l1,
                                       std::size_t l2) const {
  return ps(s1, s2) * k1(s1, l1) * k2(s2, l2);
}

void LocalMarkovOperator::validate(double tol) const {
  for (const Matrix* t : {&t1, &t2}) {
    if (t->rows() != t->cols()) throw ValidationError("local operator must be square");
    require_nonnegative(*t, "local operator");
    if (stochastic) {
      for (double s : row_sums(*t)) {
        if (std::abs(s - 1.0) > tol) throw ValidationError("stochastic operator row does not sum to 1");
      }
    }
    if (permutation) {
      std::vector<int> col_hits(t->cols(), 0);
      for (std::size_t r = 0; r < t->rows(); ++r) {
        int ones = 0;
        for (std::size_t c = 0; c < t->cols(); ++c) {
          const double v = (*t)(r, c);
          if (v == 1.0) {
            ++ones;
            ++col_hits[c];
          } else if (v != 0.0) {
            throw ValidationError("permutation operator has an entry other than 0 or 1");
          }
        }
        if (ones != 1) throw ValidationError("permutation operator row needs exactly one unit entry");
      }
      for (int h : col_hits) {
        if (h != 1) throw ValidationError("permutation operator column needs exactly one unit entry");
      }
    }
  }
}

LocalMarkovOperator LocalMarkovOperator::identity(const DiscreteLCMeasure& m) {
  return {Matrix::identity(m.n1() * m.m1()), Matrix::identity(m.n2() * m.m2()), true, true};
}

LocalMasses local_mass_functions(const DiscreteLCMeasure& m) {
  return {row_sums(m.k1), row_sums(m.k2)};
}

namespace {

// sup over supp P_S of |p1(s1) p2(s2) - 1|, plus the mean of p1 there.
struct SupportStats {
  double max_deviation = 0.0;
  double p1_mean = 0.0;
  bool any = false;
};

SupportStats support_stats(const Matrix& ps, const std::vector<double>& p1,
                           const std::vector<double>& p2, double threshold) {
  SupportStats st;
  double p1_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < ps.rows(); ++i) {
    for (std::size_t j = 0; j < ps.cols(); ++j) {
      if (ps(i, j) <= threshold) continue;
      st.max_deviation = std::max(st.max_deviation, std::abs(p1[i] * p2[j] - 1.0));
      p1_sum += p1[i];
      ++count;
    }
  }
  st.any = count > 0;
  if (st.any) st.p1_mean = p1_sum / static_cast<double>(count);
  return st;
}

}  // namespace

TrivialityVerdict is_trivial(const DiscreteLCMeasure& m, double tol, double support_threshold) {
  if (!(tol > 0.0)) throw InvalidArgument("triviality tolerance must be positive");
  const LocalMasses masses = local_mass_functions(m);
  const SupportStats st = support_stats(m.ps, masses.p1, masses.p2, support_threshold);
  TrivialityVerdict v;
  v.max_deviation = st.max_deviation;
  v.trivial = st.max_deviation <= tol;
  if (v.trivial && st.any) v.c = st.p1_mean;
  return v;
}

DiscreteLCMeasure rescale(const DiscreteLCMeasure& m, std::span<const double> q1,
                          std::span<const double> q2) {
  require_size(q1, m.n1(), "q1");
  require_size(q2, m.n2(), "q2");
  for (auto q : {q1, q2}) {
    for (double v : q) {
      if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("rescaling factors must be positive");
    }
  }
  DiscreteLCMeasure out = m;
  double mass = 0.0;
  for (std::size_t i = 0; i < m.n1(); ++i) {
    for (std::size_t j = 0; j < m.n2(); ++j) {
      out.ps(i, j) = m.ps(i, j) * q1[i] * q2[j];
      mass += out.ps(i, j);
    }
  }
  if (std::abs(mass - 1.0) > 1e-9) {
    throw NormalizationError("rescaled source must stay a probability measure", mass);
  }
  for (std::size_t i = 0; i < m.n1(); ++i) {
    for (double& v : out.k1.row(i)) v /= q1[i];
  }
  for (std::size_t j = 0; j < m.n2(); ++j) {
    for (double& v : out.k2.row(j)) v /= q2[j];
  }
  return out;
}

namespace {

// K'(s, w) = sum_l K(s, l) T((s, l), w)
Matrix transport_kernel(const Matrix& k, const Matrix& t) {
  const std::size_t n = k.rows();
  const std::size_t m = k.cols();
  if (t.rows() != n * m || t.cols() != n * m) {
    throw InvalidArgument("local operator is " + std::to_string(t.rows()) + "x" +
                          std::to_string(t.cols()) + ", expected " + std::to_string(n * m) +
                          " square");
  }
  Matrix out(n, n * m);
  for (std::size_t s = 0; s < n; ++s) {
    auto dst = out.row(s);
    for (std::size_t l = 0; l < m; ++l) {
      const double w = k(s, l);
      if (w == 0.0) continue;
      auto src = t.row(s * m + l);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += w * src[c];
    }
  }
  return out;
}

// P(T^*(1))(s) = sum_l K(s, l) sum_c T((s, l), c)
std::vector<double> transported_mass(const Matrix& k, const Matrix& t) {
  const std::size_t m = k.cols();
  if (t.rows() != k.rows() * m) throw InvalidArgument("local operator dimension mismatch");
  const std::vector<double> t_one = row_sums(t);
  std::vector<double> out(k.rows(), 0.0);
  for (std::size_t s = 0; s < k.rows(); ++s) {
    for (std::size_t l = 0; l < m; ++l) out[s] += k(s, l) * t_one[s * m + l];
  }
  return out;
}

}  // namespace

DiscreteLCMeasure apply_local_markov(const DiscreteLCMeasure& m, const LocalMarkovOperator& op) {
  return {m.ps, transport_kernel(m.k1, op.t1), transport_kernel(m.k2, op.t2)};
}

MarkovianCheck check_pab_markovian(const DiscreteLCMeasure& m, const LocalMarkovOperator& op,
                                   double tol, double support_threshold) {
  const auto p1 = transported_mass(m.k1, op.t1);
  const auto p2 = transported_mass(m.k2, op.t2);
  const SupportStats st = support_stats(m.ps, p1, p2, support_threshold);
  MarkovianCheck out;
  out.max_deviation = st.max_deviation;
  out.holds = st.max_deviation <= tol;
  if (out.holds && st.any) out.c = st.p1_mean;
  return out;
}

namespace {

// (P_j f)(s) = sum_l K(s, l) f(s, l)
std::vector<double> integrate_omega(const Matrix& k, std::span<const double> f) {
  std::vector<double> out(k.rows(), 0.0);
  for (std::size_t s = 0; s < k.rows(); ++s) {
    for (std::size_t l = 0; l < k.cols(); ++l) out[s] += k(s, l) * f[s * k.cols() + l];
  }
  return out;
}

std::vector<double> integrate_apparatus(const Matrix& k, std::span<const double> g) {
  std::vector<double> out(k.rows(), 0.0);
  for (std::size_t s = 0; s < k.rows(); ++s) {
    for (std::size_t l = 0; l < k.cols(); ++l) out[s] += k(s, l) * g[l];
  }
  return out;
}

double pair_with_source(const Matrix& ps, const std::vector<double>& u, const std::vector<double>& v) {
  double total = 0.0;
  for (std::size_t i = 0; i < ps.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < ps.cols(); ++j) row += ps(i, j) * v[j];
    total += u[i] * row;
  }
  return total;
}

}  // namespace

double expectation(const DiscreteLCMeasure& m, std::span<const double> f1,
                   std::span<const double> f2) {
  require_size(f1, m.n1() * m.m1(), "f1");
  require_size(f2, m.n2() * m.m2(), "f2");
  return pair_with_source(m.ps, integrate_omega(m.k1, f1), integrate_omega(m.k2, f2));
}

double apparatus_expectation(const DiscreteLCMeasure& m, std::span<const double> g1,
                             std::span<const double> g2) {
  require_size(g1, m.m1(), "g1");
  require_size(g2, m.m2(), "g2");
  return pair_with_source(m.ps, integrate_apparatus(m.k1, g1), integrate_apparatus(m.k2, g2));
}

double discrete_correlation(const DiscreteLCMeasure& m, std::span<const double> obs1,
                            std::span<const double> obs2) {
  require_size(obs1, m.n1(), "obs1");
  require_size(obs2, m.n2(), "obs2");
  require_observable(obs1, "obs1");
  require_observable(obs2, "obs2");
  const LocalMasses masses = local_mass_functions(m);
  std::vector<double> u(m.n1()), v(m.n2());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = masses.p1[i] * obs1[i];
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = masses.p2[j] * obs2[j];
  return pair_with_source(m.ps, u, v);
}

void LcFamily::validate() const {
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) measure(i, j).validate();
  }
  if (k1[0].cols() != k1[1].cols() || k2[0].cols() != k2[1].cols()) {
    throw ValidationError("kernels of one side must share the apparatus space");
  }
}

double chsh_discrete(const LcFamily& family, const ObservableQuadruple& obs) {
  auto c = [&](int i, int j) {
    return discrete_correlation(family.measure(i, j), obs.side1[i], obs.side2[j]);
  };
  return chsh_value(c(0, 0), c(0, 1), c(1, 0), c(1, 1));
}

namespace {

Matrix random_stochastic_rows(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::exponential_distribution<double> expo(1.0);
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    for (double& v : m.row(r)) total += (v = expo(rng));
    for (double& v : m.row(r)) v /= total;
  }
  return m;
}

// Positive entries with roughly a fifth of them zeroed, so the support is not
// always the full grid.
Matrix random_source(std::mt19937_64& rng, std::size_t n1, std::size_t n2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix ps(n1, n2);
  for (double& v : ps.data()) v = u(rng) < 0.2 ? 0.0 : u(rng);
  if (ps.sum() == 0.0) ps(0, 0) = 1.0;
  const double total = ps.sum();
  for (double& v : ps.data()) v /= total;
  return ps;
}

void scale(Matrix& m, double factor) {
  for (double& v : m.data()) v *= factor;
}

}  // namespace

LcFamily random_trivial_family(std::mt19937_64& rng, const LcDims& dims) {
  std::uniform_real_distribution<double> log_c(-2.0, 2.0);
  const double c = std::exp(log_c(rng));
  LcFamily f;
  f.ps = random_source(rng, dims.n1, dims.n2);
  for (auto& k : f.k1) {
    k = random_stochastic_rows(rng, dims.n1, dims.m1);
    scale(k, c);
  }
  for (auto& k : f.k2) {
    k = random_stochastic_rows(rng, dims.n2, dims.m2);
    scale(k, 1.0 / c);
  }
  return f;
}

DiscreteLCMeasure random_trivial_measure(std::mt19937_64& rng, const LcDims& dims) {
  return random_trivial_family(rng, dims).measure(0, 0);
}

DiscreteLCMeasure random_nontrivial_measure(std::mt19937_64& rng, const LcDims& dims,
                                            double min_deviation) {
  std::uniform_real_distribution<double> u(0.25, 4.0);
  for (;;) {
    DiscreteLCMeasure m = random_trivial_measure(rng, dims);
    std::vector<double> q1(dims.n1), q2(dims.n2);
    for (double& v : q1) v = u(rng);
    for (double& v : q2) v = u(rng);
    double mass = 0.0;
    for (std::size_t i = 0; i < dims.n1; ++i) {
      for (std::size_t j = 0; j < dims.n2; ++j) mass += m.ps(i, j) * q1[i] * q2[j];
    }
    for (double& v : q1) v /= mass;
    DiscreteLCMeasure out = rescale(m, q1, q2);
    if (is_trivial(out, 1e-12).max_deviation >= min_deviation) return out;
  }
}

ObservableQuadruple random_observables(std::mt19937_64& rng, const LcDims& dims) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ObservableQuadruple obs;
  for (auto& o : obs.side1) {
    o.resize(dims.n1);
    for (double& v : o) v = u(rng);
  }
  for (auto& o : obs.side2) {
    o.resize(dims.n2);
    for (double& v : o) v = u(rng);
  }
  return obs;
}

LocalMarkovOperator random_stochastic_operator(std::mt19937_64& rng, const DiscreteLCMeasure& m) {
  return {random_stochastic_rows(rng, m.n1() * m.m1(), m.n1() * m.m1()),
          random_stochastic_rows(rng, m.n2() * m.m2(), m.n2() * m.m2()), true, false};
}

LocalMarkovOperator random_permutation_operator(std::mt19937_64& rng, const DiscreteLCMeasure& m) {
  auto perm = [&](std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    Matrix t(n, n);
    for (std::size_t r = 0; r < n; ++r) t(r, idx[r]) = 1.0;
    return t;
  };
  return {perm(m.n1() * m.m1()), perm(m.n2() * m.m2()), true, true};
}

DiscretizedAir discretize_abs_cos(const ChshSettings& settings, std::size_t grid,
                                  std::size_t apparatus) {
  if (grid == 0 || apparatus == 0) throw InvalidArgument("grid and apparatus sizes must be positive");
  const double cell = kTwoPi / static_cast<double>(grid);
  std::vector<double> s(grid);
  for (std::size_t i = 0; i < grid; ++i) s[i] = (static_cast<double>(i) + 0.5) * cell;

  DiscretizedAir out;
  out.family.ps = Matrix(grid, grid);
  for (std::size_t i = 0; i < grid; ++i) out.family.ps(i, i) = 1.0 / static_cast<double>(grid);

  const std::array<Angle, 2> side1{settings.a, settings.a2};
  const std::array<Angle, 2> side2{settings.b, settings.b2};
  const double spread = 1.0 / static_cast<double>(apparatus);
  for (int k = 0; k < 2; ++k) {
    Matrix k1(grid, apparatus), k2(grid, apparatus, spread);
    auto& o1 = out.observables.side1[k];
    auto& o2 = out.observables.side2[k];
    o1.resize(grid);
    o2.resize(grid);
    for (std::size_t i = 0; i < grid; ++i) {
      const double w = 0.5 * kPi * std::abs(std::cos(s[i] - side1[k].value()));
      for (double& v : k1.row(i)) v = w * spread;
      o1[i] = spin_value({Side::one, side1[k]}, Angle{s[i]});
      o2[i] = spin_value({Side::two, side2[k]}, Angle{s[i]});
    }
    out.family.k1[k] = std::move(k1);
    out.family.k2[k] = std::move(k2);
  }
  return out;
}

namespace {

std::size_t dim_field(const json& dims, const char* name) {
  if (!dims.contains(name) || !dims[name].is_number_unsigned() || dims[name].get<std::size_t>() == 0) {
    throw ValidationError(std::string("dims.") + name + " must be a positive integer");
  }
  return dims[name].get<std::size_t>();
}

Matrix matrix_field(const json& j, std::size_t rows, std::size_t cols, const std::string& name) {
  if (!j.is_array()) throw ValidationError(name + " must be a flat row-major array");
  if (j.size() != rows * cols) {
    throw ValidationError(name + " has " + std::to_string(j.size()) + " entries, expected " +
                          std::to_string(rows * cols));
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError(name + " entries must be numbers");
    m.data()[i] = j[i].get<double>();
  }
  require_nonnegative(m, name.c_str());
  return m;
}

std::vector<double> vector_field(const json& j, std::size_t n, const std::string& name) {
  if (!j.is_array() || j.size() != n) {
    throw ValidationError(name + " must be an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!j[i].is_number()) throw ValidationError(name + " entries must be numbers");
    out[i] = j[i].get<double>();
    if (!(out[i] >= -1.0 && out[i] <= 1.0)) throw ValidationError(name + " entries must lie in [-1, 1]");
  }
  return out;
}

json parse_document(std::istream& in) {
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw ValidationError("measure document must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("measure document is not valid JSON: ") + e.what());
  }
}

LcDims read_dims(const json& j) {
  if (!j.contains("dims") || !j["dims"].is_object()) throw ValidationError("missing 'dims' object");
  const json& d = j["dims"];
  return {dim_field(d, "S1"), dim_field(d, "S2"), dim_field(d, "M1"), dim_field(d, "M2")};
}

json dims_json(std::size_t n1, std::size_t n2, std::size_t m1, std::size_t m2) {
  return {{"S1", n1}, {"S2", n2}, {"M1", m1}, {"M2", m2}};
}

const json& field(const json& j, const char* name) {
  if (!j.contains(name)) throw ValidationError(std::string("missing '") + name + "'");
  return j[name];
}

}  // namespace

DiscreteLCMeasure load_measure(std::istream& in) {
  const json j = parse_document(in);
  const LcDims d = read_dims(j);
  DiscreteLCMeasure m{matrix_field(field(j, "PS"), d.n1, d.n2, "PS"),
                      matrix_field(field(j, "K1"), d.n1, d.m1, "K1"),
                      matrix_field(field(j, "K2"), d.n2, d.m2, "K2")};
  m.validate();
  return m;
}

void save_measure(std::ostream& out, const DiscreteLCMeasure& m) {
  json j{{"dims", dims_json(m.n1(), m.n2(), m.m1(), m.m2())},
         {"PS", m.ps.data()},
         {"K1", m.k1.data()},
         {"K2", m.k2.data()}};
  out << j.dump() << '\n';
}

FamilyDocument load_family(std::istream& in) {
  const json j = parse_document(in);
  const LcDims d = read_dims(j);
  FamilyDocument doc;
  doc.family.ps = matrix_field(field(j, "PS"), d.n1, d.n2, "PS");
  const json& k1 = field(j, "K1");
  const json& k2 = field(j, "K2");
  const json& obs = field(j, "observables");
  if (!k1.is_array() || k1.size() != 2 || !k2.is_array() || k2.size() != 2) {
    throw ValidationError("a family needs two kernels per side in 'K1' and 'K2'");
  }
  const json& o1 = field(obs, "side1");
  const json& o2 = field(obs, "side2");
  if (!o1.is_array() || o1.size() != 2 || !o2.is_array() || o2.size() != 2) {
    throw ValidationError("a family needs two observables per side");
  }
  for (std::size_t k = 0; k < 2; ++k) {
    doc.family.k1[k] = matrix_field(k1[k], d.n1, d.m1, "K1[" + std::to_string(k) + "]");
    doc.family.k2[k] = matrix_field(k2[k], d.n2, d.m2, "K2[" + std::to_string(k) + "]");
    doc.observables.side1[k] = vector_field(o1[k], d.n1, "observables.side1");
    doc.observables.side2[k] = vector_field(o2[k], d.n2, "observables.side2");
  }
  doc.family.validate();
  return doc;
}

void save_family(std::ostream& out, const LcFamily& family, const ObservableQuadruple& obs) {
  json j{{"dims", dims_json(family.ps.rows(), family.ps.cols(), family.k1[0].cols(),
                            family.k2[0].cols())},
         {"PS", family.ps.data()},
         {"K1", {family.k1[0].data(), family.k1[1].data()}},
         {"K2", {family.k2[0].data(), family.k2[1].data()}},
         {"observables", {{"side1", {obs.side1[0], obs.side1[1]}},
                          {"side2", {obs.side2[0], obs.side2[1]}}}}};
  out << j.dump() << '\n';
}

}  // namespace lcsim
