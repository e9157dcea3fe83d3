#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "lcsim/circle.hpp"

namespace lcsim {

enum class BuiltinShape { abs_cos, cos_squared, uniform };

std::string_view to_string(BuiltinShape shape);
BuiltinShape builtin_shape_from_string(std::string_view name);

/// A nonnegative periodic function on the circle.
///
/// Builtin shapes are scaled to unit mean over the circle: uniform is 1,
/// abs-cos is (pi/2)|cos x|, cos-squared is 2 cos^2 x. Sampled profiles hold
/// values at 2 pi k / N and interpolate linearly with wraparound; their values
/// are used as given.
class Profile {
public:
  static Profile builtin(BuiltinShape shape);
  static Profile sampled(std::vector<double> samples);

  double operator()(double x) const;

  bool is_builtin() const noexcept { return samples_.empty(); }
  BuiltinShape shape() const noexcept { return shape_; }
  const std::vector<double>& samples() const noexcept { return samples_; }

  /// Points in [0, 2pi) where the profile has a kink; quadrature splits there.
  std::vector<double> kinks() const;

private:
  Profile() = default;
  BuiltinShape shape_ = BuiltinShape::uniform;
  std::vector<double> samples_;
};

/// Rotation-invariant candidate supported on the diagonal s1 = s2 = s:
/// dR_{a,b} = rho(s) p1(s - a) p2(s - b) ds.
///
/// A builtin rho is read as a probability density (shape / 2pi), so the model
/// {rho: uniform, p1: abs-cos, p2: uniform} is the AIR density 1/4 |cos(s - a)|.
struct CandidateModel {
  Profile rho = Profile::builtin(BuiltinShape::uniform);
  Profile p1 = Profile::builtin(BuiltinShape::uniform);
  Profile p2 = Profile::builtin(BuiltinShape::uniform);

  double source_density(double s) const;
  double density(double s, Angle a, Angle b) const;

  /// The AIR model carrying the |cos| weight on side 1 (or side 2 when mirrored).
  static CandidateModel abs_cos(Side weight_side = Side::one);
  /// rho and the unweighted side uniform, the weighted side set to `shape`.
  static CandidateModel with_weight(BuiltinShape shape, Side weight_side = Side::one);
};

CandidateModel load_candidate(std::istream& in);
CandidateModel load_candidate_file(const std::string& path);
void save_candidate(std::ostream& out, const CandidateModel& model);

/// Side-1 arc x side-2 arc.
enum class Quadrant { II, IJ, JI, JJ };
inline constexpr std::array<Quadrant, 4> kQuadrants{Quadrant::II, Quadrant::IJ, Quadrant::JI,
                                                    Quadrant::JJ};

std::string_view to_string(Quadrant q);

struct QuadrantMasses {
  double ii = 0, ij = 0, ji = 0, jj = 0;

  double operator[](Quadrant q) const;
  double total() const { return ii + ij + ji + jj; }
};

/// The AIR density 1/4 |cos(s - a)|.
double air_density(Angle a, Angle s);

/// Singlet quadrant probabilities: 1/2 cos^2((b-a)/2) on II and JJ,
/// 1/2 sin^2((b-a)/2) on IJ and JI.
double quadrant_prob_analytic(Angle a, Angle b, Quadrant q);
QuadrantMasses quadrant_masses_analytic(Angle a, Angle b);

enum class QuadratureRule {
  midpoint,             ///< composite midpoint, O(h^2)
  midpoint_richardson,  ///< (4 M(2n) - M(n)) / 3, O(h^4)
};

struct QuadratureOptions {
  int panels = 4096;  ///< panels per smooth sub-interval, at least 8
  QuadratureRule rule = QuadratureRule::midpoint_richardson;
};

/// Integral of rho(s) p1(s-a) p2(s-b) over the arc intersection of quadrant q.
/// Each intersection piece is split at the kinks of the three profiles before
/// the composite rule is applied. An empty intersection gives exactly 0.
double quadrant_prob_quadrature(const CandidateModel& m, Angle a, Angle b, Quadrant q,
                                const QuadratureOptions& opt = {});
QuadrantMasses quadrant_masses(const CandidateModel& m, Angle a, Angle b,
                               const QuadratureOptions& opt = {});

/// Total mass of R_{a,b}, integrated over the whole circle.
double total_mass(const CandidateModel& m, Angle a, Angle b, const QuadratureOptions& opt = {});

inline constexpr double kNormalizationTolerance = 1e-6;

/// <S_a^(1) S_b^(2)> = P(IJ) + P(JI) - P(II) - P(JJ). Throws NormalizationError
/// when the masses do not sum to 1 within kNormalizationTolerance.
double correlation_from_masses(const QuadrantMasses& masses);
double correlation(const CandidateModel& m, Angle a, Angle b, const QuadratureOptions& opt = {});
double correlation_analytic(Angle a, Angle b);

/// CHSH settings a, a', b, b'.
struct ChshSettings {
  Angle a, a2, b, b2;
  static ChshSettings tsirelson();
};

/// |C(a,b) - C(a,b')| + |C(a',b) + C(a',b')|
double chsh_value(double c_ab, double c_ab2, double c_a2b, double c_a2b2);
double chsh(const CandidateModel& m, const ChshSettings& s, const QuadratureOptions& opt = {});
double chsh_analytic(const ChshSettings& s);

/// True iff m1 at (a1, b1) and m2 at (a2, b2) give the same four quadrant
/// probabilities within tol. Both must be normalized.
bool empirically_equivalent(const CandidateModel& m1, Angle a1, Angle b1,
                            const CandidateModel& m2, Angle a2, Angle b2, double tol,
                            const QuadratureOptions& opt = {});

}  // namespace lcsim
