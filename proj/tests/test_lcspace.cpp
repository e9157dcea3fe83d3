#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "lcsim/error.hpp"
#include "lcsim/lcspace.hpp"

using namespace lcsim;

namespace {

const LcDims kSmall{6, 5, 3, 4};

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

DiscreteLCMeasure with_scaled_kernels(DiscreteLCMeasure m, double s1, double s2) {
  for (double& v : m.k1.data()) v *= s1;
  for (double& v : m.k2.data()) v *= s2;
  return m;
}

}  // namespace

TEST_CASE("local mass functions") {
  std::mt19937_64 rng(21);
  DiscreteLCMeasure m = random_trivial_measure(rng, kSmall);
  m = with_scaled_kernels(m, 1.0 / local_mass_functions(m).p1[0], 1.0 / local_mass_functions(m).p2[0]);
  for (double p : local_mass_functions(m).p1) CHECK(p == doctest::Approx(1.0));

  const auto doubled = local_mass_functions(with_scaled_kernels(m, 2.0, 1.0));
  for (double p : doubled.p1) CHECK(p == doctest::Approx(2.0));

  for (double& v : m.k1.row(2)) v = 0.0;
  CHECK(local_mass_functions(m).p1[2] == 0.0);
}

TEST_CASE("triviality verdicts") {
  std::mt19937_64 rng(22);
  DiscreteLCMeasure m = random_trivial_measure(rng, kSmall);
  const auto p = local_mass_functions(m);
  m = with_scaled_kernels(m, 1.0 / p.p1[0], 1.0 / p.p2[0]);

  auto v = is_trivial(m, 1e-9);
  CHECK(v.trivial);
  REQUIRE(v.c.has_value());
  CHECK(*v.c == doctest::Approx(1.0));

  v = is_trivial(with_scaled_kernels(m, 2.0, 0.5), 1e-9);
  CHECK(v.trivial);
  CHECK(*v.c == doctest::Approx(2.0));

  // full-support P_S with a non-constant p1
  DiscreteLCMeasure bumpy = m;
  bumpy.ps = Matrix(kSmall.n1, kSmall.n2, 1.0 / (kSmall.n1 * kSmall.n2));
  for (double& x : bumpy.k1.row(1)) x *= 1.5;
  v = is_trivial(bumpy, 1e-9);
  CHECK_FALSE(v.trivial);
  CHECK_FALSE(v.c.has_value());
  CHECK(v.max_deviation == doctest::Approx(0.5));

  // a deviation confined to rows outside supp P_S does not count
  DiscreteLCMeasure off_support = m;
  for (std::size_t j = 0; j < kSmall.n2; ++j) off_support.ps(3, j) = 0.0;
  const double total = off_support.ps.sum();
  for (double& x : off_support.ps.data()) x /= total;
  for (double& x : off_support.k1.row(3)) x *= 7.0;
  CHECK(is_trivial(off_support, 1e-9).trivial);

  CHECK_THROWS_AS(is_trivial(m, 0.0), InvalidArgument);
}

TEST_CASE("rescaling keeps the induced measure and can break triviality") {
  std::mt19937_64 rng(23);
  const DiscreteLCMeasure m = random_trivial_measure(rng, kSmall);

  const std::vector<double> ones1(kSmall.n1, 1.0), ones2(kSmall.n2, 1.0);
  const DiscreteLCMeasure same = rescale(m, ones1, ones2);
  CHECK(same.ps == m.ps);
  CHECK(same.k1 == m.k1);

  auto q1 = random_vector(rng, kSmall.n1, 0.5, 2.0);
  auto q2 = random_vector(rng, kSmall.n2, 0.5, 2.0);
  double mass = 0.0;
  for (std::size_t i = 0; i < kSmall.n1; ++i)
    for (std::size_t j = 0; j < kSmall.n2; ++j) mass += m.ps(i, j) * q1[i] * q2[j];
  for (double& x : q1) x /= mass;

  const DiscreteLCMeasure r = rescale(m, q1, q2);
  for (std::size_t i = 0; i < kSmall.n1; ++i)
    for (std::size_t j = 0; j < kSmall.n2; ++j)
      for (std::size_t l1 = 0; l1 < kSmall.m1; ++l1)
        for (std::size_t l2 = 0; l2 < kSmall.m2; ++l2)
          CHECK(r.induced_mass(i, j, l1, l2) == doctest::Approx(m.induced_mass(i, j, l1, l2)).epsilon(1e-12));
  CHECK_FALSE(is_trivial(r, 1e-9).trivial);

  // a constant factor q1 (x) q2 == 1 leaves the verdict unchanged
  std::vector<double> c1(kSmall.n1, 3.0), c2(kSmall.n2, 1.0 / 3.0);
  CHECK(is_trivial(rescale(m, c1, c2), 1e-9).trivial == is_trivial(m, 1e-9).trivial);

  std::vector<double> bad(kSmall.n1, 2.0);
  CHECK_THROWS_AS(rescale(m, bad, ones2), NormalizationError);
  CHECK_THROWS_AS(rescale(m, ones2, ones2), InvalidArgument);
}

TEST_CASE("local Markov transport") {
  std::mt19937_64 rng(24);
  const DiscreteLCMeasure m = random_trivial_measure(rng, kSmall);

  SUBCASE("identity is the identity on induced functionals") {
    const DiscreteLCMeasure t = apply_local_markov(m, LocalMarkovOperator::identity(m));
    for (int k = 0; k < 20; ++k) {
      const auto f1 = random_vector(rng, kSmall.n1 * kSmall.m1, -1.0, 1.0);
      const auto f2 = random_vector(rng, kSmall.n2 * kSmall.m2, -1.0, 1.0);
      CHECK(apparatus_expectation(t, f1, f2) == doctest::Approx(expectation(m, f1, f2)).epsilon(1e-12));
    }
  }

  SUBCASE("transported functional equals P_S o (P1 T1* (x) P2 T2*)") {
    const LocalMarkovOperator op = random_stochastic_operator(rng, m);
    op.validate();
    const DiscreteLCMeasure t = apply_local_markov(m, op);
    const auto f1 = random_vector(rng, kSmall.n1 * kSmall.m1, -1.0, 1.0);
    const auto f2 = random_vector(rng, kSmall.n2 * kSmall.m2, -1.0, 1.0);
    // apply T* to the test functions by hand
    auto pull = [](const Matrix& tm, const std::vector<double>& f) {
      std::vector<double> g(tm.rows(), 0.0);
      for (std::size_t r = 0; r < tm.rows(); ++r)
        for (std::size_t c = 0; c < tm.cols(); ++c) g[r] += tm(r, c) * f[c];
      return g;
    };
    CHECK(apparatus_expectation(t, f1, f2) ==
          doctest::Approx(expectation(m, pull(op.t1, f1), pull(op.t2, f2))).epsilon(1e-12));
  }

  SUBCASE("stochastic keeps trivial, permutation keeps nontrivial") {
    const DiscreteLCMeasure t = apply_local_markov(m, random_stochastic_operator(rng, m));
    CHECK(is_trivial(t, 1e-9).trivial);
    const DiscreteLCMeasure nt = random_nontrivial_measure(rng, kSmall);
    const LocalMarkovOperator perm = random_permutation_operator(rng, nt);
    perm.validate();
    CHECK_FALSE(is_trivial(apply_local_markov(nt, perm), 1e-9).trivial);
  }

  SUBCASE("dimension mismatch") {
    LocalMarkovOperator op = LocalMarkovOperator::identity(m);
    op.t1 = Matrix::identity(3);
    CHECK_THROWS_AS(apply_local_markov(m, op), InvalidArgument);
  }
}

TEST_CASE("operator validation") {
  LocalMarkovOperator op{Matrix(2, 2, 0.5), Matrix::identity(2), true, false};
  CHECK_NOTHROW(op.validate());
  op.permutation = true;
  CHECK_THROWS_AS(op.validate(), ValidationError);
  op = {Matrix(2, 2, 0.7), Matrix::identity(2), true, false};
  CHECK_THROWS_AS(op.validate(), ValidationError);
  op = {Matrix(2, 3), Matrix::identity(2), false, false};
  CHECK_THROWS_AS(op.validate(), ValidationError);
}

TEST_CASE("P_ab-Markovian check") {
  std::mt19937_64 rng(25);
  DiscreteLCMeasure m = random_trivial_measure(rng, kSmall);
  const auto p = local_mass_functions(m);
  m = with_scaled_kernels(m, 1.0 / p.p1[0], 1.0 / p.p2[0]);

  const LocalMarkovOperator stoch = random_stochastic_operator(rng, m);
  CHECK(static_cast<bool>(check_pab_markovian(m, stoch, 1e-9)));

  LocalMarkovOperator scaled = LocalMarkovOperator::identity(m);
  for (double& x : scaled.t1.data()) x *= 2.0;
  for (double& x : scaled.t2.data()) x *= 0.5;
  scaled.stochastic = false;
  scaled.permutation = false;
  const MarkovianCheck chk = check_pab_markovian(m, scaled, 1e-9);
  CHECK(chk.holds);
  REQUIRE(chk.c.has_value());
  CHECK(*chk.c == doctest::Approx(2.0));
  // agrees with triviality of the transported measure
  CHECK(is_trivial(apply_local_markov(m, scaled), 1e-9).trivial);

  LocalMarkovOperator zeroing = LocalMarkovOperator::identity(m);
  for (std::size_t r = 0; r < zeroing.t1.rows(); ++r) zeroing.t1(r, r) = 0.0;
  CHECK_FALSE(check_pab_markovian(m, zeroing, 1e-9).holds);
}

TEST_CASE("discrete correlation") {
  std::mt19937_64 rng(26);
  DiscreteLCMeasure m = random_trivial_measure(rng, kSmall);
  const std::vector<double> plus1(kSmall.n1, 1.0), plus2(kSmall.n2, 1.0), zero2(kSmall.n2, 0.0);
  CHECK(discrete_correlation(m, plus1, plus2) == doctest::Approx(1.0));
  CHECK(discrete_correlation(m, plus1, zero2) == 0.0);
  auto o1 = random_vector(rng, kSmall.n1, -1.0, 1.0);
  auto o2 = random_vector(rng, kSmall.n2, -1.0, 1.0);
  const double c = discrete_correlation(m, o1, o2);
  for (double& x : o1) x = -x;
  CHECK(discrete_correlation(m, o1, o2) == doctest::Approx(-c));
  o1[0] = 1.5;
  CHECK_THROWS_AS(discrete_correlation(m, o1, o2), InvalidArgument);
}

TEST_CASE("trivial families obey the CHSH bound") {
  std::mt19937_64 rng(27);
  for (int k = 0; k < 200; ++k) {
    const LcFamily f = random_trivial_family(rng, kSmall);
    const ObservableQuadruple obs = random_observables(rng, kSmall);
    CHECK(chsh_discrete(f, obs) <= 2.0 + 1e-9);
  }
  const LcFamily f = random_trivial_family(rng, kSmall);
  ObservableQuadruple ones;
  for (auto& o : ones.side1) o.assign(kSmall.n1, 1.0);
  for (auto& o : ones.side2) o.assign(kSmall.n2, 1.0);
  CHECK(chsh_discrete(f, ones) == doctest::Approx(2.0));
}

TEST_CASE("discretized abs-cos family approaches the Tsirelson value") {
  const DiscretizedAir air = discretize_abs_cos(ChshSettings::tsirelson());
  CHECK_FALSE(is_trivial(air.family.measure(0, 0), 1e-9).trivial);
  const double value = chsh_discrete(air.family, air.observables);
  // Riemann-sum value frozen from an independent numpy evaluation: 2.829563326987926
  CHECK(value == doctest::Approx(2.829563326987926).epsilon(1e-12));
  CHECK(std::abs(value - 2 * std::sqrt(2.0)) < 0.05);
  // and refinement converges
  const double fine = chsh_discrete(discretize_abs_cos(ChshSettings::tsirelson(), 512, 2).family,
                                    discretize_abs_cos(ChshSettings::tsirelson(), 512, 2).observables);
  CHECK(std::abs(fine - 2 * std::sqrt(2.0)) < std::abs(value - 2 * std::sqrt(2.0)));
}

TEST_CASE("measure documents") {
  std::mt19937_64 rng(28);
  const DiscreteLCMeasure m = random_trivial_measure(rng, kSmall);
  std::stringstream buf;
  save_measure(buf, m);
  const DiscreteLCMeasure back = load_measure(buf);
  CHECK(back.ps.rows() == m.ps.rows());
  CHECK(is_trivial(back, 1e-9).trivial);

  auto load = [](const std::string& text) {
    std::istringstream in(text);
    return load_measure(in);
  };
  CHECK_THROWS_AS(load(R"({"dims": {"S1": 1, "S2": 1, "M1": 1, "M2": 1}, "PS": [1], "K1": [-1], "K2": [1]})"),
                  ValidationError);
  CHECK_THROWS_AS(load(R"({"dims": {"S1": 1, "S2": 1, "M1": 1, "M2": 1}, "PS": [0.5], "K1": [1], "K2": [1]})"),
                  NormalizationError);
  CHECK_THROWS_AS(load(R"({"dims": {"S1": 2, "S2": 1, "M1": 1, "M2": 1}, "PS": [1], "K1": [1], "K2": [1]})"),
                  ValidationError);
  CHECK_THROWS_AS(load("[]"), ValidationError);

  const DiscretizedAir air = discretize_abs_cos(ChshSettings::tsirelson(), 16, 2);
  std::stringstream fam;
  save_family(fam, air.family, air.observables);
  const FamilyDocument doc = load_family(fam);
  CHECK(chsh_discrete(doc.family, doc.observables) ==
        doctest::Approx(chsh_discrete(air.family, air.observables)));
}
