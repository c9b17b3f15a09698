#pragma once

#include "otlab/cost.hpp"
#include "otlab/region.hpp"

#include <cstddef>
#include <vector>

namespace otlab {

struct Hole {
  PixelSet pixels;               // hole cells on the region grid
  double area = 0.0;             // coverage-corrected area
  Point2 centroid = Point2::Zero();
  std::vector<Point2> boundary;  // centers of hole cells with a non-hole 4-neighbor
  struct Query {
    Point2 focus;
    bool c_convex = false;
  };
  std::vector<Query> c_convex_wrt;
};

struct HoleReport {
  std::vector<Hole> holes;
  std::size_t count() const { return holes.size(); }
};

/// Bounded components of the raster complement (4-connected) inside the
/// bounding box enlarged by one cell. Throws ResolutionTooCoarse if a hole has
/// fewer than 4 cells.
HoleReport detect_holes(const Region& region);

enum class SetSide { source_set, target_set };

struct ConvexityTest {
  bool convex = false;
  double hull_area = 0.0;
  double image_area = 0.0;
  /// (hull_area - image_area) / hull_area.
  double excess = 0.0;
};

// Maps every cell center of `set` to co-vector coordinates at `focus`:
//   source_set:  x  -> -D̄c(x, focus)   (focus is a target point)
//   target_set:  x̄ -> -Dc(focus, x̄)   (focus is a source point)
// and compares the hull of the image with the image area (sum of
// |det cross_hessian| times cell area, the area of the union of mapped cells).
ConvexityTest c_convexity_test(const CostFunction& cost, const PixelSet& set, const Point2& focus,
                               SetSide side, double tolerance = 1e-2);

inline bool c_convex_wrt(const CostFunction& cost, const Region& set, const Point2& focus, SetSide side,
                         double tolerance = 1e-2) {
  return c_convexity_test(cost, set.support(), focus, side, tolerance).convex;
}

/// Records, for each hole and query point x0, whether the hole is c-convex
/// with respect to x0 (holes are subsets of the target chart).
void annotate_hole_convexity(HoleReport& report, const CostFunction& cost, const std::vector<Point2>& queries,
                             double tolerance = 1e-2);

enum class SegmentSide {
  target_points,  // focus is a source point x0; samples are c-Exp_{x0}(p)
  source_points,  // focus is a target point x̄0; samples are c-Exp_{x̄0}(p)
};

struct CSegment {
  Point2 focus;
  CoVec2 p0;
  CoVec2 p1;
  SegmentSide side = SegmentSide::target_points;
  std::vector<Point2> samples;
};

/// n_samples >= 2 points along the c-exponential image of the straight co-vector segment [p0, p1].
CSegment c_segment(const CostFunction& cost, const Point2& focus, const CoVec2& p0, const CoVec2& p1,
                   int n_samples, SegmentSide side = SegmentSide::target_points);

}  // namespace otlab
