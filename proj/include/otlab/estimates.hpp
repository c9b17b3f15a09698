#pragma once

#include "otlab/geometry.hpp"
#include "otlab/hull.hpp"
#include "otlab/singular.hpp"
#include "otlab/transport.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace otlab {

/// max over t in [0, 1] (t_grid samples) of f(t) - max(f(0), f(1)), where
/// f(t) = -c(x, x̄(t)) + c(x0, x̄(t)) along the c-segment x̄(t) = c-Exp_{x0}((1-t) p0 + t p1).
double loeper_check(const CostFunction& cost, const Point2& x0, const CoVec2& p0, const CoVec2& p1,
                    const Point2& x, int t_grid = 65);

struct LoeperSweep {
  double max_violation = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // invalid pairs or segments leaving the chart
};

/// loeper_check over `samples` random tuples: x0, x uniform in `source`, p0, p1
/// the co-vectors at x0 of two uniform points of `target`.
LoeperSweep loeper_sweep(const CostFunction& cost, const Region& source, const Region& target,
                         std::size_t samples, std::uint64_t seed);

using TransportPair = std::pair<Point2, Point2>;  // (x, x̄)

/// max over all couples of c(x0,x̄0) + c(x1,x̄1) - c(x0,x̄1) - c(x1,x̄0); 0 for fewer than two pairs.
double c_monotonicity_check(const CostFunction& cost, const std::vector<TransportPair>& pairs);

/// Support pixel centers where a single piece attains the max, paired with
/// that piece's target point; `count` distinct pixels drawn uniformly.
std::vector<TransportPair> sample_transport_pairs(const DualPotential& phi, const SourceDensity& mu,
                                                  std::size_t count, std::uint64_t seed);

// S = {x : u(x) <= m0(x) + height} with m0(x) = -c(x, focus) + lambda0 and
// lambda0 = c(base, focus) + u(base), so that m0 touches u at the base.
struct Section {
  Point2 focus = Point2::Zero();
  Point2 base = Point2::Zero();
  double lambda0 = 0.0;
  double height = 0.0;
  PixelSet pixels;
  double volume = 0.0;
  std::vector<CoVec2> coord_image;  // -D̄c(x, focus) at the pixel centers
  std::vector<CoVec2> hull;
  SupportingPair planes;            // minimum-width pair of the hull (if >= 3 vertices)
  double ell = 0.0;                 // longest chord of the hull orthogonal to the planes
  CoVec2 p0 = CoVec2::Zero();       // -D̄c(base, focus)
  double gap = 0.0;                 // m0(base) + height - u(base)
  ConvexityTest convexity;

  double plane_distance() const { return std::min(planes.distance_lo(p0), planes.distance_hi(p0)); }
  /// Raised c-affine function m0 + height.
  double m(const CostFunction& cost, const Point2& x) const { return -cost.eval(x, focus) + lambda0 + height; }
};

/// Throws EmptySection if no support pixel satisfies the inequality.
Section build_section(const DualPotential& phi, const SourceDensity& mu, const Point2& focus, const Point2& base,
                      double height);

/// Pixels where u - (-c(., x̄0) + c(x0, x̄0) + u(x0)) <= h D / 2 (+ roundoff),
/// x̄0 = c-Exp_{x0}(p0) and D the diameter of the subdifferential at x0: the
/// pixels whose centers lie within about half a pixel of the contact set.
/// Throws InvalidArgument unless p0 lies in that subdifferential.
PixelSet contact_set(const DualPotential& phi, const SourceDensity& mu, const Point2& x0, const CoVec2& p0);

// K(x) = max over foci x̄ of -c(x, x̄) + λ*(x̄), where the foci are c-Exp_{x0}
// of a co-vector grid and λ*(x̄) is the largest offset with m <= m0 + height
// on ∂S (located between boundary pixels and their outside neighbours) and
// m(x0) <= u(x0).
struct CConeFn {
  Section section;
  double step = 0.0;                      // co-grid spacing
  std::vector<CoVec2> covectors;          // grid points with a valid focus
  std::vector<Point2> foci;
  std::vector<double> offsets;            // λ*
  std::vector<std::uint8_t> vertex_bound; // λ* is set by the vertex constraint: focus in ∂_c K(x0)
  std::vector<std::size_t> boundary;      // boundary pixels of the section
  std::vector<Point2> boundary_points;    // where the constraint m <= m0 + height is imposed
  int grid_nx = 0;                        // co-grid layout (row-major)
  int grid_ny = 0;
  std::vector<int> slot;                  // grid point -> index into covectors, or -1

  double value(const CostFunction& cost, const Point2& x) const;
  /// Co-vectors (at x0) of the foci in ∂_c K(x0).
  std::vector<CoVec2> subdifferential() const;
};

/// Throws BoundaryTouching if the section meets the raster boundary of spt μ.
CConeFn build_c_cone(const DualPotential& phi, const SourceDensity& mu, const Section& section);

struct ConeInclusion {
  std::size_t checked = 0;
  std::size_t failures = 0;  // foci with no c-support of u in S (within one co-grid cell)
  double margin = 0.0;       // signed distance from p0 to the boundary of hull(∂_c K(x0))
  double predicted_margin = 0.0;  // gap / C with C = max boundary |∂m/∂p̄|
};

/// Checks ∂_c K(x0) ⊂ ∂_c u(S): each focus of ∂_c K(x0) (or a grid neighbour)
/// must minimize u + c(., x̄) over spt μ at a pixel of S.
ConeInclusion check_cone(const DualPotential& phi, const SourceDensity& mu, const CConeFn& cone);

/// Cones over random sections: base at a random support pixel center, focus
/// c-Exp of a random interior point of ∂u there, height uniform in [h_lo, h_hi].
/// Sections touching the raster boundary are redrawn (at most 50 tries each).
std::vector<CConeFn> random_cones(const DualPotential& phi, const SourceDensity& mu, std::size_t count,
                                  std::uint64_t seed, double h_lo, double h_hi);

struct Witness {
  CoVec2 p;
  double delta = 0.0;
};

struct AleksandrovResult {
  std::vector<double> ratios;
  bool witness_valid = false;
  double witness_distance = 0.0;  // distance of the witness to the coord image of ∂ spt ν (negative outside)
};

/// ratio = gap^2 ell / (min plane distance * volume^2) per section. The
/// witness (when given) is validated against the first section's base point.
/// Throws DegenerateSection if ell < 2 h_mesh for a section with gap > 0.
AleksandrovResult aleksandrov_check(const DualPotential& phi, const SourceDensity& mu,
                                    const std::vector<Section>& sections, const std::optional<Witness>& witness);

}  // namespace otlab
