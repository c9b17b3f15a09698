#pragma once

#include "otlab/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace otlab {

using Ring = std::vector<Point2>;

/// Uniform cell grid; cell (i, j) covers [x0 + i h, x0 + (i+1) h] x [y0 + j h, y0 + (j+1) h].
struct Grid {
  double x0 = 0.0;
  double y0 = 0.0;
  double h = 1.0;
  int nx = 0;
  int ny = 0;

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  int col(std::size_t k) const { return static_cast<int>(k % static_cast<std::size_t>(nx)); }
  int row(std::size_t k) const { return static_cast<int>(k / static_cast<std::size_t>(nx)); }
  Point2 center(int i, int j) const { return {x0 + (i + 0.5) * h, y0 + (j + 0.5) * h}; }
  Point2 center(std::size_t k) const { return center(col(k), row(k)); }
  double cell_area() const { return h * h; }
  /// Cell containing p, if inside the grid.
  std::optional<std::size_t> locate(const Point2& p) const;
};

/// A set of grid cells.
struct PixelSet {
  Grid grid;
  std::vector<std::size_t> pixels;  // sorted ascending

  bool empty() const { return pixels.empty(); }
  std::size_t size() const { return pixels.size(); }
  double area() const { return static_cast<double>(pixels.size()) * grid.cell_area(); }
};

// A planar region bounded by simple polygons together with its raster.
//
// Rings are stored with outer boundaries counter-clockwise and hole
// boundaries clockwise; membership is the even-odd rule over all rings. A
// raster cell belongs to the region iff its center does.
class Region {
 public:
  Region() = default;
  /// Rasterizes with cell size h over the bounding box of the rings.
  Region(std::vector<Ring> rings, double h);

  /// h = longer bbox side / resolution.
  static Region with_resolution(std::vector<Ring> rings, int resolution);
  /// h = bbox diagonal / 512.
  static Region with_default_step(std::vector<Ring> rings);

  const std::vector<Ring>& rings() const { return rings_; }
  const Grid& grid() const { return grid_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }
  bool in_raster(std::size_t k) const { return mask_[k] != 0; }
  Point2 bbox_lo() const { return lo_; }
  Point2 bbox_hi() const { return hi_; }
  double h() const { return grid_.h; }

  /// Even-odd point-in-polygon test against the rings.
  bool contains(const Point2& p) const;
  /// Membership of the raster cell containing p (false outside the grid).
  bool raster_contains(const Point2& p) const;

  double polygon_area() const;
  double raster_area() const { return static_cast<double>(support_count_) * grid_.cell_area(); }
  std::size_t support_count() const { return support_count_; }
  PixelSet support() const;
  /// Exact fraction of cell k covered by the region.
  double coverage(std::size_t k) const;

  /// Same rings, different cell size.
  Region rerasterized(double h) const { return Region(rings_, h); }

 private:
  std::vector<Ring> rings_;
  Grid grid_;
  std::vector<std::uint8_t> mask_;
  Point2 lo_ = Point2::Zero();
  Point2 hi_ = Point2::Zero();
  std::size_t support_count_ = 0;
};

double signed_area(const Ring& ring);
bool ring_is_simple(const Ring& ring);

// Preset shapes. Curved boundaries are inscribed polygons with `segments` edges.
std::vector<Ring> square_shape(const Point2& lo, const Point2& hi);
std::vector<Ring> disk_shape(const Point2& center, double radius, int segments = 720);
std::vector<Ring> annulus_shape(const Point2& center, double r_in, double r_out, int segments = 720);
/// Two unit squares [-gap/2-1, -gap/2] x [-1/2, 1/2] and [gap/2, gap/2+1] x [-1/2, 1/2].
std::vector<Ring> split_pair_shape(double gap);
/// [-1, 1]^2 minus the quadrant [0, 1]^2.
std::vector<Ring> l_shape();

/// Parses a region literal:
///   square | square(x0,y0,x1,y1) | disk(r) | disk(cx,cy,r) | annulus(r_in,r_out)
///   | split_pair(gap) | L_shape | polygon(x y, x y, ...) [hole(x y, ...)]...
std::vector<Ring> parse_region_spec(std::string_view spec);

/// Connected components of a cell mask (8-connectivity when eight_connected).
std::vector<int> label_components(const Grid& grid, const std::vector<std::uint8_t>& mask,
                                  bool eight_connected, int* count);

}  // namespace otlab
