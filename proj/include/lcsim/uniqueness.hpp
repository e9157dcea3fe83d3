#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lcsim/airmeasure.hpp"

namespace lcsim {

struct ConditionResult {
  std::string name;
  bool holds = false;
  double residual = 0.0;
};

struct WorstSetting {
  Angle a;
  Angle b;
  Quadrant quadrant = Quadrant::II;
};

/// Samples of p(x) = -d/db R_{a,b}(I_a x I_b) at b - a = x + pi/2, on an
/// evenly spaced grid over [-pi/2, pi/2].
struct ReconstructedProfile {
  double h = 0.0;
  std::vector<double> x;
  std::vector<double> values;
  /// sup |p(x) - cos(x)/4| over points further than `exclusion` from +-pi/2.
  double sup_error = 0.0;
  double exclusion = 0.0;
};

struct ReproductionCheck {
  bool reproduces = false;
  double max_error = 0.0;
  WorstSetting worst;
};

struct UniquenessOptions {
  int grid = 32;             ///< K x K settings a_i = 2 pi i / K
  double tol = 1e-6;         ///< reproduction tolerance on quadrant probabilities
  double condition_tol = 1e-6;
  double h = 1e-3;           ///< finite-difference step
  int samples = 257;         ///< reconstruction grid size
  std::optional<Side> weight_side;  ///< branch of the proof; picked from the zeros if unset
  QuadratureOptions quadrature;
};

struct UniquenessReport {
  bool reproduces = false;
  double max_quadrant_error = 0.0;
  WorstSetting worst;
  double total_mass = 0.0;
  Side weight_side = Side::one;
  std::vector<ConditionResult> necessary_conditions;
  std::optional<ReconstructedProfile> reconstructed;
  std::string reconstruction_note;
};

inline constexpr int kMinReconstructionSamples = 128;
inline constexpr double kMaxDifferenceStep = 1e-2;

/// Largest deviation of the quadrature quadrant probabilities from the singlet
/// closed forms over a K x K setting grid. Throws NormalizationError when the
/// candidate's total mass is off by more than kNormalizationTolerance.
ReproductionCheck check_reproduction(const CandidateModel& m, int grid, double tol,
                                     const QuadratureOptions& opt = {});

/// Reproduction check plus necessary conditions and profile reconstruction.
UniquenessReport verify_reproduction(const CandidateModel& m, const UniquenessOptions& opt = {});

/// Conditions every reproducing candidate must satisfy, for the chosen weight
/// side: the product of the boundary values vanishes, rho and the unweighted
/// profile are constant, the weighted profile vanishes at both ends of its
/// half period, and the combined profile equals |cos|/4. They are necessary,
/// not sufficient.
std::vector<ConditionResult> check_necessary_conditions(const CandidateModel& m, double tol,
                                                        std::optional<Side> weight_side = {});

Side infer_weight_side(const CandidateModel& m);

using UpperMassFn = std::function<double(Angle a, Angle b)>;

/// Central-difference reconstruction from any evaluable R_{a,b}(I_a x I_b).
ReconstructedProfile reconstruct_profile(const UpperMassFn& upper_mass, double h, int samples,
                                         Angle base = Angle{});

/// Rejects sampled profiles with fewer than kMinReconstructionSamples nodes.
ReconstructedProfile reconstruct_profile(const CandidateModel& m, double h, int samples,
                                         Angle base = Angle{}, const QuadratureOptions& opt = {});

void write_report_json(std::ostream& out, const UniquenessReport& report);
void write_report_table(std::ostream& out, const UniquenessReport& report);

}  // namespace lcsim
