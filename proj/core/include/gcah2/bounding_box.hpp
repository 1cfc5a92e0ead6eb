#pragma once
//
// Project     : gcah2
// Module      : bounding_box.hpp
// Description : axis-parallel boxes
//

#include <algorithm>
#include <cmath>
#include <limits>

#include "gcah2/common.hpp"

namespace gcah2 {

struct BoundingBox {
  Vec3 lower = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 upper = Vec3::Constant(-std::numeric_limits<double>::infinity());

  static BoundingBox from_corners(const Vec3& lower, const Vec3& upper) { return {lower, upper}; }

  bool empty() const { return (lower.array() > upper.array()).any(); }

  void extend(const Vec3& p) {
    lower = lower.cwiseMin(p);
    upper = upper.cwiseMax(p);
  }
  void extend(const BoundingBox& b) {
    lower = lower.cwiseMin(b.lower);
    upper = upper.cwiseMax(b.upper);
  }

  Vec3 extent() const { return upper - lower; }
  double diameter() const { return empty() ? 0.0 : extent().norm(); }

  bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= lower.array() - tol).all() && (p.array() <= upper.array() + tol).all();
  }

  // longest coordinate axis
  int longest_axis() const {
    const Vec3 e = extent();
    int axis = 0;
    for (int k = 1; k < 3; ++k)
      if (e[k] > e[axis]) axis = k;
    return axis;
  }
};

// coordinatewise gap, zero for touching or overlapping boxes
inline double distance(const BoundingBox& a, const BoundingBox& b) {
  double d2 = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double gap = std::max({0.0, a.lower[k] - b.upper[k], b.lower[k] - a.upper[k]});
    d2 += gap * gap;
  }
  return std::sqrt(d2);
}

}  // namespace gcah2
