#pragma once

#include "otlab/cost.hpp"
#include "otlab/region.hpp"

#include <Eigen/SparseCore>

#include <cstdint>
#include <span>
#include <vector>

namespace otlab {

/// mu = f dVol on the raster support of a region; f is piecewise constant on cells.
struct SourceDensity {
  Region region;
  std::vector<double> f;  // per grid cell, 0 outside the support

  static SourceDensity uniform(Region region);
  /// Blocks of `block` cells alternate between density ratio `contrast` and 1, then normalized.
  static SourceDensity checkerboard(Region region, double contrast, int block);

  const Grid& grid() const { return region.grid(); }
  double total_mass() const;
  /// Smallest L with 1/L <= f <= L on the support.
  double lambda_bound() const;
};

/// nu as weighted points inside a parent region (the support of nu).
struct DiscreteTarget {
  std::vector<Point2> points;
  std::vector<double> weights;
  Region parent_region;

  std::size_t size() const { return points.size(); }

  /// One point per occupied stratum of block x block raster cells, uniformly
  /// placed among the stratum's support cells; weight proportional to the
  /// stratum's share of the (uniform) density. The block size is chosen so the
  /// point count is as close to `count` as possible.
  static DiscreteTarget stratified(Region parent, std::size_t count, std::uint64_t seed);
  /// Rings at r_k = r_in + k (r_out - r_in) / (rings - 1), k = 0..rings-1, with
  /// per_ring equally spaced points each; weights are the areas of the annular
  /// strata around each ring (half strata at both ends). The end rings are
  /// pulled into the polygonal parent by a relative 2e-5.
  static DiscreteTarget polar(Region parent, const Point2& center, double r_in, double r_out, int rings,
                              int per_ring, double phase = 0.0);
  /// Explicit points; empty weights means equal weights.
  static DiscreteTarget from_points(Region parent, std::vector<Point2> points, std::vector<double> weights = {});

  /// Throws InvalidArgument unless weights are positive and sum to 1, points
  /// are distinct and inside the parent polygons.
  void validate() const;
  /// sqrt(area(spt nu) / N): the typical spacing of the discretization.
  double mean_spacing() const;
};

/// u(x) = max_j ( -c(x, ȳ_j) + λ_j ).
class DualPotential {
 public:
  DualPotential(CostFunction cost, DiscreteTarget target, std::vector<double> lambda);

  const CostFunction& cost() const { return cost_; }
  const DiscreteTarget& target() const { return target_; }
  const std::vector<double>& lambda() const { return lambda_; }
  std::size_t size() const { return lambda_.size(); }

  /// c-affine piece j at x.
  double piece(std::size_t j, const Point2& x) const { return -cost_.eval(x, target_.points[j]) + lambda_[j]; }
  /// Gradient of piece j at x, i.e. -Dc(x, ȳ_j).
  CoVec2 piece_gradient(std::size_t j, const Point2& x) const { return -cost_.grad_x(x, target_.points[j]); }
  double value(const Point2& x) const;
  /// Same potential with λ shifted so that λ_0 = 0.
  DualPotential normalized() const;
  DualPotential with_lambda(std::vector<double> lambda) const { return {cost_, target_, std::move(lambda)}; }

 private:
  CostFunction cost_;
  DiscreteTarget target_;
  std::vector<double> lambda_;
};

struct PotentialValue {
  double value = 0.0;
  std::vector<int> active;  // ascending indices within gap_tol of the max
};

PotentialValue eval_potential(const DualPotential& phi, const Point2& x, double gap_tol);

/// 10 h max|Dc| over (subsampled) support cells and all targets.
double default_gap_tol(const DualPotential& phi, const SourceDensity& mu);

// Cell masses of the tessellation induced by phi on the raster support. Within
// each support cell every piece is replaced by its first-order Taylor
// expansion at the cell center and the square is split exactly among the
// resulting affine pieces, so masses are continuous and piecewise smooth in λ
// (exact for costs whose pieces differ by affine functions, e.g. quadratic).
struct CellIntegrals {
  std::vector<double> masses;
  Eigen::SparseMatrix<double> hessian;  // ∂ mass_i / ∂ λ_j (if requested)
};

CellIntegrals integrate_cells(const DualPotential& phi, const SourceDensity& mu, bool with_hessian);

/// Per support cell, the pieces that win somewhere on the cell square under
/// the same linearization (CSR layout over all grid cells).
struct SquareActivity {
  Grid grid;
  std::vector<std::uint32_t> offsets;  // size grid.size() + 1
  std::vector<int> cells;
  std::span<const int> at(std::size_t k) const {
    return {cells.data() + offsets[k], cells.data() + offsets[k + 1]};
  }
};

SquareActivity square_activity(const DualPotential& phi, const SourceDensity& mu);
/// The same activity test for one square of side h centered at c (ascending).
std::vector<int> pieces_on_square(const DualPotential& phi, const Point2& c, double h);

struct LaguerreTessellation {
  Grid grid;
  std::vector<int> assignment;  // argmax at cell centers, -1 outside the support
  std::vector<double> masses;   // integrated as in integrate_cells
  std::vector<std::uint8_t> boundary;  // top two values at the center within gap_tol
  double gap_tol = 0.0;
};

LaguerreTessellation laguerre_assign(const DualPotential& phi, const SourceDensity& mu, double gap_tol);

struct SolverOptions {
  double tol = 1e-6;
  int max_iter = 100;
};

struct DualSolveResult {
  DualPotential potential;   // normalized, λ_0 = 0
  std::vector<double> masses;
  double residual = 0.0;     // max_j |mass_j - ν_j|
  int iterations = 0;
  bool converged = false;
};

/// Damped Newton on the semi-discrete Kantorovich dual. Throws
/// DisconnectedSupport / InvalidArgument on bad input; non-convergence is
/// reported through `converged` with the best iterate.
DualSolveResult solve_dual(const CostFunction& cost, const SourceDensity& mu, const DiscreteTarget& nu,
                           const SolverOptions& options = {});

/// Target point of the unique active piece at x; throws SingularPoint if
/// two or more pieces are active within gap_tol.
Point2 transport_map(const DualPotential& phi, const Point2& x, double gap_tol);

double pushforward_check(const LaguerreTessellation& tess, const DiscreteTarget& nu);

}  // namespace otlab
