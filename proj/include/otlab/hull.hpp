#pragma once

#include "otlab/types.hpp"

#include <span>
#include <vector>

namespace otlab {

/// Counter-clockwise convex hull without collinear points (monotone chain).
/// Degenerate inputs give one or two points.
std::vector<Vec2> convex_hull(std::span<const Vec2> points);

/// Area of a polygon given counter-clockwise (0 for fewer than 3 vertices).
double polygon_area(std::span<const Vec2> poly);

/// Largest distance between two points of the set.
double diameter(std::span<const Vec2> points);

/// Affine dimension of a finite point set with scale thresholds: 2 if the
/// hull area exceeds area_threshold, else 1 if the diameter exceeds
/// diameter_threshold, else 0.
int affine_dimension(std::span<const Vec2> points, double diameter_threshold, double area_threshold);

/// Pair of parallel supporting lines of a convex polygon at minimum separation.
struct SupportingPair {
  Vec2 normal = Vec2::UnitX();  // unit normal; lines are {q : <normal, q> = lo} and {... = hi}
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  /// Distances from p to the two lines.
  double distance_lo(const Vec2& p) const { return std::abs(normal.dot(p) - lo); }
  double distance_hi(const Vec2& p) const { return std::abs(normal.dot(p) - hi); }
};

/// Rotating calipers over hull edges; the hull must have at least 3 vertices.
SupportingPair minimum_width_pair(std::span<const Vec2> hull);

/// Longest segment in direction `dir` contained in a convex polygon.
double longest_chord(std::span<const Vec2> hull, const Vec2& dir);

/// Whether p lies in the closed convex polygon (counter-clockwise), with slack eps.
bool convex_contains(std::span<const Vec2> hull, const Vec2& p, double eps = 0.0);

/// Distance from p to the boundary of a convex polygon (0 for < 2 vertices handled as points).
double distance_to_boundary(std::span<const Vec2> hull, const Vec2& p);

/// Distance from p to segment [a, b].
double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b);

}  // namespace otlab
