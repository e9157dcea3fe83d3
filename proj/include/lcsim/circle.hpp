#pragma once

#include <numbers>
#include <vector>

namespace lcsim {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Default tolerance used to absorb rounding at arc endpoints.
inline constexpr double kArcEpsilon = 1e-12;

/// Wraps a finite real number into [0, 2pi). Throws InvalidArgument on NaN/inf.
double normalize(double radians);

/// A point of S^1 = R mod 2pi, stored as its representative in [0, 2pi).
class Angle {
public:
  constexpr Angle() noexcept = default;
  explicit Angle(double radians) : value_{normalize(radians)} {}

  static Angle from_degrees(double deg) { return Angle{deg * kPi / 180.0}; }

  constexpr double value() const noexcept { return value_; }

  Angle operator+(Angle rhs) const { return Angle{value_ + rhs.value_}; }
  Angle operator-(Angle rhs) const { return Angle{value_ - rhs.value_}; }
  Angle operator+(double rhs) const { return Angle{value_ + rhs}; }
  Angle operator-(double rhs) const { return Angle{value_ - rhs}; }

  constexpr bool operator==(const Angle&) const noexcept = default;

private:
  double value_ = 0.0;
};

/// Half-open arc [start, start + length) on the circle, length in (0, 2pi].
class Arc {
public:
  Arc(Angle start, double length);

  Angle start() const noexcept { return start_; }
  double length() const noexcept { return length_; }

  /// Detection arc I_a = [a - pi/2, a + pi/2).
  static Arc upper(Angle setting);
  /// Complementary arc J_a = [a + pi/2, a + 3pi/2).
  static Arc lower(Angle setting);

private:
  Angle start_;
  double length_;
};

bool arc_contains(const Arc& arc, Angle s, double eps = kArcEpsilon);

/// Intersection of two arcs as at most two disjoint arcs. Pieces that touch
/// across the 0/2pi seam are merged; pieces no longer than eps are dropped.
std::vector<Arc> arc_intersect(const Arc& x, const Arc& y, double eps = kArcEpsilon);

/// Shortest distance between two points of the circle, in [0, pi].
double circular_distance(Angle x, Angle y);

enum class Side { one = 1, two = 2 };

/// The +-1 spin observable of one station: side 1 reads +1 on I_a, side 2
/// reads -1 on I_b; both flip sign on the complementary arc.
struct SpinObservable {
  Side side;
  Angle setting;
};

int spin_value(const SpinObservable& obs, Angle s, double eps = kArcEpsilon);

}  // namespace lcsim
