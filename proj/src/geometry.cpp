#include "otlab/geometry.hpp"

#include "otlab/hull.hpp"

#include <cmath>
#include <map>

namespace otlab {

HoleReport detect_holes(const Region& region) {
  const Grid& g = region.grid();
  // Complement of the raster in a grid padded by one cell on every side.
  Grid padded{g.x0 - g.h, g.y0 - g.h, g.h, g.nx + 2, g.ny + 2};
  std::vector<std::uint8_t> outside(padded.size(), 1);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (region.in_raster(g.index(i, j))) outside[padded.index(i + 1, j + 1)] = 0;

  int count = 0;
  const auto label = label_components(padded, outside, false, &count);
  const int unbounded = label[0];

  std::map<int, std::vector<std::size_t>> by_label;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const int l = label[padded.index(i + 1, j + 1)];
      if (l >= 0 && l != unbounded) by_label[l].push_back(g.index(i, j));
    }

  HoleReport report;
  for (auto& [l, cells] : by_label) {
    if (cells.size() < 4) {
      throw Error(ErrorCode::ResolutionTooCoarse,
                  "hole candidate with " + std::to_string(cells.size()) + " cells");
    }
    Hole hole;
    hole.pixels.grid = g;
    hole.pixels.pixels = cells;
    std::vector<std::uint8_t> in_hole(g.size(), 0);
    for (auto k : cells) in_hole[k] = 1;

    // Hole cells plus region cells touching the hole, weighted by uncovered fraction.
    std::vector<std::uint8_t> counted(g.size(), 0);
    double area = 0.0;
    Point2 centroid = Point2::Zero();
    for (auto k : cells) {
      const int i = g.col(k), j = g.row(k);
      centroid += g.center(k);
      bool on_boundary = false;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int ni = i + di, nj = j + dj;
          if (ni < 0 || nj < 0 || ni >= g.nx || nj >= g.ny) continue;
          const std::size_t nk = g.index(ni, nj);
          if (!counted[nk] && (in_hole[nk] || region.in_raster(nk))) {
            counted[nk] = 1;
            area += (1.0 - region.coverage(nk)) * g.cell_area();
          }
          if (!in_hole[nk] && (di == 0 || dj == 0)) on_boundary = true;
        }
      if (on_boundary) hole.boundary.push_back(g.center(k));
    }
    hole.area = area;
    hole.centroid = centroid / static_cast<double>(cells.size());
    report.holes.push_back(std::move(hole));
  }
  return report;
}

ConvexityTest c_convexity_test(const CostFunction& cost, const PixelSet& set, const Point2& focus,
                               SetSide side, double tolerance) {
  if (set.empty()) throw Error(ErrorCode::EmptySet, "c-convexity test of an empty set");
  std::vector<Vec2> image;
  image.reserve(set.size());
  double image_area = 0.0;
  for (auto k : set.pixels) {
    const Point2 q = set.grid.center(k);
    const Point2 x = side == SetSide::source_set ? q : focus;
    const Point2 xb = side == SetSide::source_set ? focus : q;
    if (!cost.valid_pair(x, xb)) {
      throw Error(ErrorCode::InvalidArgument, "set contains points forming an invalid pair with the focus");
    }
    image.push_back(side == SetSide::source_set ? Vec2(-cost.grad_xbar(x, xb)) : Vec2(-cost.grad_x(x, xb)));
    image_area += std::abs(cost.cross_hessian(x, xb).determinant()) * set.grid.cell_area();
  }
  ConvexityTest t;
  t.image_area = image_area;
  t.hull_area = polygon_area(convex_hull(image));
  t.excess = t.hull_area > 0.0 ? (t.hull_area - t.image_area) / t.hull_area : 0.0;
  t.convex = t.excess <= tolerance;
  return t;
}

void annotate_hole_convexity(HoleReport& report, const CostFunction& cost, const std::vector<Point2>& queries,
                             double tolerance) {
  for (auto& hole : report.holes) {
    for (const auto& q : queries) {
      hole.c_convex_wrt.push_back({q, c_convexity_test(cost, hole.pixels, q, SetSide::target_set, tolerance).convex});
    }
  }
}

CSegment c_segment(const CostFunction& cost, const Point2& focus, const CoVec2& p0, const CoVec2& p1,
                   int n_samples, SegmentSide side) {
  if (n_samples < 2) throw Error(ErrorCode::InvalidArgument, "a c-segment needs at least two samples");
  CSegment seg{focus, p0, p1, side, {}};
  seg.samples.reserve(n_samples);
  for (int k = 0; k < n_samples; ++k) {
    const double t = static_cast<double>(k) / (n_samples - 1);
    const CoVec2 p = (1.0 - t) * p0 + t * p1;
    seg.samples.push_back(side == SegmentSide::target_points ? c_exp(cost, focus, p) : c_exp_bar(cost, focus, p));
  }
  return seg;
}

}  // namespace otlab
