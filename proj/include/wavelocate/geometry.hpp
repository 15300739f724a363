#pragma once

#include <cmath>

namespace wavelocate {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Quadrant index of a point on an L x W plate: 0 lower-left, 1 lower-right,
// 2 upper-left, 3 upper-right. Boundaries belong to the upper/right side.
inline int quadrant_of(const Point2& p, double length, double width) {
  return 2 * (p.y >= 0.5 * width ? 1 : 0) + (p.x >= 0.5 * length ? 1 : 0);
}

}  // namespace wavelocate
