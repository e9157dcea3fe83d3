#include "lcsim/circle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lcsim/error.hpp"

namespace lcsim {

double normalize(double radians) {
  if (!std::isfinite(radians)) {
    throw InvalidArgument("angle must be finite, got " + std::to_string(radians));
  }
  double r = std::fmod(radians, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative value can round up to exactly 2pi.
  if (r >= kTwoPi) r = 0.0;
  return r;
}

Arc::Arc(Angle start, double length) : start_{start}, length_{length} {
  if (!(length > 0.0) || length > kTwoPi) {
    throw InvalidArgument("arc length must lie in (0, 2pi], got " + std::to_string(length));
  }
}

Arc Arc::upper(Angle setting) { return Arc{setting - kPi / 2.0, kPi}; }

Arc Arc::lower(Angle setting) { return Arc{setting + kPi / 2.0, kPi}; }

namespace {

// Offset of s from the arc start, with values within eps of a full turn
// snapped back onto the start point.
double offset_from(Angle start, Angle s, double eps) {
  double off = normalize(s.value() - start.value());
  if (off > kTwoPi - eps) off = 0.0;
  return off;
}

}  // namespace

bool arc_contains(const Arc& arc, Angle s, double eps) {
  return offset_from(arc.start(), s, eps) < arc.length() - eps;
}

std::vector<Arc> arc_intersect(const Arc& x, const Arc& y, double eps) {
  // Work in coordinates local to x, where x = [0, lx).
  const double lx = x.length();
  const double ly = y.length();
  double d = offset_from(x.start(), y.start(), eps);

  struct Piece {
    double lo, hi;
  };
  std::vector<Piece> pieces;
  // y as [d, d + ly) and its copy shifted by one turn, [d - 2pi, d - 2pi + ly).
  if (double hi = std::min(lx, d + ly); hi - d > eps) pieces.push_back({d, hi});
  if (double hi = std::min(lx, d + ly - kTwoPi); hi > eps) pieces.push_back({0.0, hi});

  // Two pieces that meet across the seam of a full-circle x form one arc.
  if (pieces.size() == 2 && lx >= kTwoPi - eps && pieces[0].hi >= kTwoPi - eps &&
      pieces[1].lo <= eps) {
    pieces = {{pieces[0].lo, pieces[1].hi + kTwoPi}};
  }

  std::vector<Arc> out;
  out.reserve(pieces.size());
  for (const auto& p : pieces) {
    out.emplace_back(x.start() + p.lo, std::min(p.hi - p.lo, kTwoPi));
  }
  return out;
}

double circular_distance(Angle x, Angle y) {
  double d = normalize(x.value() - y.value());
  return d > kPi ? kTwoPi - d : d;
}

int spin_value(const SpinObservable& obs, Angle s, double eps) {
  const bool in_upper = arc_contains(Arc::upper(obs.setting), s, eps);
  if (obs.side == Side::one) return in_upper ? +1 : -1;
  return in_upper ? -1 : +1;
}

}  // namespace lcsim
