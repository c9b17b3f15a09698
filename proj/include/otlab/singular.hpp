#pragma once

#include "otlab/geometry.hpp"
#include "otlab/transport.hpp"

#include <cstddef>
#include <vector>

namespace otlab {

struct SubdifferentialPolytope {
  Point2 base = Point2::Zero();
  std::vector<int> active;            // target indices, ascending
  std::vector<CoVec2> vertices;       // -Dc(base, ȳ_j) for j in active
  std::vector<CoVec2> hull;           // counter-clockwise
  std::vector<Point2> image_points;   // ȳ_j for j in active
  int affine_dim = 0;
  double diameter = 0.0;
  double area = 0.0;
};

/// affine_dim is 2 iff the hull area exceeds (10 h)^2, at least 1 iff the
/// diameter exceeds 10 h, with h = h_mesh.
SubdifferentialPolytope make_polytope(const DualPotential& phi, const Point2& x0, std::vector<int> active,
                                      double h_mesh);

/// Active set at gap_tol (see eval_potential).
SubdifferentialPolytope subdifferential_at(const DualPotential& phi, const Point2& x0, double gap_tol,
                                           double h_mesh);

/// Active set = pieces that win somewhere on the axis-aligned square of side
/// h_mesh centered at x0, after linearizing every piece at x0. This is the
/// pixel-scale notion used by the singular-set analysis.
SubdifferentialPolytope subdifferential_on_square(const DualPotential& phi, const Point2& x0, double h_mesh);

/// max |D²c(x, ȳ_j)| over (subsampled) support cells and all targets.
double max_source_hessian(const DualPotential& phi, const SourceDensity& mu);

/// Co-vector jump separating genuine singularities from the boundaries between
/// neighbouring target points: max(10 h max|D²c|, min(4 s, D / 2)) where s is
/// the target spacing and D the target diameter, both in co-vector units.
double macroscopic_threshold(const DualPotential& phi, const SourceDensity& mu);

struct SingularComponent {
  std::vector<std::size_t> pixels;  // grid indices, ascending
  std::size_t representative = 0;   // pixel with the widest subdifferential
  double diameter = 0.0;            // Euclidean, between pixel centers
  int extent_x = 0;                 // bounding box in pixels
  int extent_y = 0;
};

struct SingularSet {
  Grid grid;
  double threshold = 0.0;
  std::vector<std::size_t> pixels;  // ascending
  std::vector<int> component;       // per entry of pixels
  std::vector<SingularComponent> components;
  SquareActivity activity;

  bool empty() const { return pixels.empty(); }
  /// Hull diameter of the active co-gradients at pixel k (0 for a single piece).
  double jump_at(const DualPotential& phi, std::size_t k) const;
};

/// Support pixels whose square meets two or more cells with a co-gradient
/// jump above `threshold`, grouped into 8-connected components.
SingularSet singular_set(const DualPotential& phi, const SourceDensity& mu, double threshold);
inline SingularSet singular_set(const DualPotential& phi, const SourceDensity& mu) {
  return singular_set(phi, mu, macroscopic_threshold(phi, mu));
}

enum class Consistency { consistent, violation, not_applicable };

struct ComponentVerdict {
  std::size_t component = 0;
  bool is_isolated = false;
  Point2 representative = Point2::Zero();
  int pixel_affine_dim = 0;  // subdifferential on the representative pixel
  int affine_dim = 0;        // hull over every cell meeting the component
  SubdifferentialPolytope polytope;  // the component-level hull at the representative
  Consistency hole_consistency = Consistency::not_applicable;
};

struct IsolationReport {
  std::vector<ComponentVerdict> components;
  std::size_t hole_count = 0;
  std::size_t isolated_count() const;
  bool violation() const;
};

/// Maximum bounding-box side (pixels) of an isolated component, and the width
/// of the singular-free ring required around it.
inline constexpr int kIsolatedExtent = 3;
inline constexpr int kIsolationRing = 3;

/// A component is isolated if it fits in a kIsolatedExtent^2 pixel box and no
/// other singular pixel lies within kIsolationRing pixels (Chebyshev) of it.
/// Isolated components with a 2-dimensional subdifferential require a hole in
/// the target region; otherwise the verdict is a violation.
IsolationReport isolation_report(const SingularSet& s, const DualPotential& phi, const SourceDensity& mu);

/// Hausdorff distance between c-Exp_{base}(∂ hull) (edges subdivided to
/// `step` in co-vector units) and the boundary cells of `hole`.
double hole_fill_distance(const CostFunction& cost, const SubdifferentialPolytope& poly, const Hole& hole,
                          double step);

/// Max over hull vertices p of the subdifferential on the pixel square at x0
/// of min |Du(x_k) - p| over pixel centers x_k within radius where a single
/// piece attains the max (so u is differentiable there).
/// Throws NotSingular if a single piece is active at x0 and
/// NoPuncturedNeighborhood if the ball holds no differentiability pixel.
double propagation_check(const DualPotential& phi, const SourceDensity& mu, const Point2& x0, double radius);

}  // namespace otlab
