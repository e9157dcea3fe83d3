#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lcsim/airmeasure.hpp"

namespace lcsim {

/// Dense row-major matrix of doubles.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_{rows}, cols_{cols}, data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  double sum() const;
  static Matrix identity(std::size_t n);

  bool operator==(const Matrix&) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Threshold on P_S entries deciding membership in supp P_S.
inline constexpr double kSupportThreshold = 1e-12;

/// Finite LC measure P_S(s1,s2) K1(l1|s1) K2(l2|s2) on S1 x S2 x M1 x M2.
///
/// `ps` is |S1| x |S2| and sums to 1. `k1` is |S1| x |M1| and `k2` is
/// |S2| x |M2|; kernel rows are positive measures, not necessarily stochastic.
struct DiscreteLCMeasure {
  Matrix ps;
  Matrix k1;
  Matrix k2;

  std::size_t n1() const { return ps.rows(); }
  std::size_t n2() const { return ps.cols(); }
  std::size_t m1() const { return k1.cols(); }
  std::size_t m2() const { return k2.cols(); }

  /// Throws ValidationError on shape mismatch, negative entries or sum(ps) != 1.
  void validate(double mass_tol = 1e-9) const;

  /// Mass the induced measure puts on the point (s1, s2, l1, l2) of Omega.
  double induced_mass(std::size_t s1, std::size_t s2, std::size_t l1, std::size_t l2) const;
};

/// Local dynamics T1 x T2, with T_j a square nonnegative matrix over
/// Omega_j = S_j x M_j indexed (s, l) -> s * |M_j| + l. Row r of T_j is the
/// image of the point r, so T_j^*(f)(r) = sum_c T_j(r, c) f(c).
struct LocalMarkovOperator {
  Matrix t1;
  Matrix t2;
  bool stochastic = false;
  bool permutation = false;

  /// Checks squareness, nonnegativity, and the claimed flags.
  void validate(double tol = 1e-12) const;

  static LocalMarkovOperator identity(const DiscreteLCMeasure& m);
};

struct LocalMasses {
  std::vector<double> p1;
  std::vector<double> p2;
};

struct TrivialityVerdict {
  bool trivial = false;
  std::optional<double> c;  ///< p1 == c and p2 == 1/c on the support, when trivial
  double max_deviation = 0.0;
};

/// p1(s1) = sum_l K1(l|s1), p2(s2) = sum_l K2(l|s2).
LocalMasses local_mass_functions(const DiscreteLCMeasure& m);

TrivialityVerdict is_trivial(const DiscreteLCMeasure& m, double tol,
                             double support_threshold = kSupportThreshold);

/// Moves the factor q1 (x) q2 from the kernels into the source:
/// Q = q1 q2 P_S, K1 / q1, K2 / q2. Requires sum P_S q1 q2 = 1 within 1e-9.
DiscreteLCMeasure rescale(const DiscreteLCMeasure& m, std::span<const double> q1,
                          std::span<const double> q2);

/// Transports m by local dynamics. The result keeps P_S and has kernels
/// P1 o T1^* and P2 o T2^*: its apparatus space on side j is Omega_j itself,
/// each column being the transported point (s', l').
DiscreteLCMeasure apply_local_markov(const DiscreteLCMeasure& m, const LocalMarkovOperator& op);

struct MarkovianCheck {
  bool holds = false;
  std::optional<double> c;
  double max_deviation = 0.0;
  explicit operator bool() const noexcept { return holds; }
};

/// Whether P1(T1^*(1)) P2(T2^*(1)) = 1 on supp P_S within tol; c is the
/// constant value of P1(T1^*(1)) there when the condition holds.
MarkovianCheck check_pab_markovian(const DiscreteLCMeasure& m, const LocalMarkovOperator& op,
                                   double tol, double support_threshold = kSupportThreshold);

/// <P, f1 (x) f2> for test functions over Omega_1 and Omega_2, indexed (s, l).
double expectation(const DiscreteLCMeasure& m, std::span<const double> f1,
                   std::span<const double> f2);

/// <P, g1 (x) g2> for functions of the apparatus configuration only.
double apparatus_expectation(const DiscreteLCMeasure& m, std::span<const double> g1,
                             std::span<const double> g2);

/// sum P_S p1 obs1 p2 obs2 for observables of the system configuration with
/// entries in [-1, 1].
double discrete_correlation(const DiscreteLCMeasure& m, std::span<const double> obs1,
                            std::span<const double> obs2);

/// Four LC measures sharing P_S: side 1 has kernels for settings a and a',
/// side 2 for b and b'.
struct LcFamily {
  Matrix ps;
  std::array<Matrix, 2> k1;
  std::array<Matrix, 2> k2;

  DiscreteLCMeasure measure(int i, int j) const { return {ps, k1[i], k2[j]}; }
  void validate() const;
};

/// Observables on S1 for a, a' and on S2 for b, b'.
struct ObservableQuadruple {
  std::array<std::vector<double>, 2> side1;
  std::array<std::vector<double>, 2> side2;
};

double chsh_discrete(const LcFamily& family, const ObservableQuadruple& obs);

struct LcDims {
  std::size_t n1 = 64, n2 = 64, m1 = 8, m2 = 8;
};

/// Trivial by construction: stochastic kernel rows, side 1 scaled by a random
/// c > 0 and side 2 by 1/c.
LcFamily random_trivial_family(std::mt19937_64& rng, const LcDims& dims);
DiscreteLCMeasure random_trivial_measure(std::mt19937_64& rng, const LcDims& dims);

/// A trivial measure rescaled by random non-constant q1, q2 until its
/// deviation from triviality is at least min_deviation.
DiscreteLCMeasure random_nontrivial_measure(std::mt19937_64& rng, const LcDims& dims,
                                            double min_deviation = 1e-3);

ObservableQuadruple random_observables(std::mt19937_64& rng, const LcDims& dims);

LocalMarkovOperator random_stochastic_operator(std::mt19937_64& rng, const DiscreteLCMeasure& m);
LocalMarkovOperator random_permutation_operator(std::mt19937_64& rng, const DiscreteLCMeasure& m);

/// Riemann discretization of the AIR model on `grid` cell midpoints: diagonal
/// P_S = 1/grid, side-1 kernels spreading (pi/2)|cos(s - a)| over `apparatus`
/// states, side-2 kernels stochastic, spin observables per setting.
struct DiscretizedAir {
  LcFamily family;
  ObservableQuadruple observables;
};
DiscretizedAir discretize_abs_cos(const ChshSettings& settings, std::size_t grid = 64,
                                  std::size_t apparatus = 8);

DiscreteLCMeasure load_measure(std::istream& in);
void save_measure(std::ostream& out, const DiscreteLCMeasure& m);

struct FamilyDocument {
  LcFamily family;
  ObservableQuadruple observables;
};
FamilyDocument load_family(std::istream& in);
void save_family(std::ostream& out, const LcFamily& family, const ObservableQuadruple& obs);

}  // namespace lcsim
