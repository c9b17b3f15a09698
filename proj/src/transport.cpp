#include "otlab/transport.hpp"

#include "otlab/parallel.hpp"
#include "otlab/structural.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace otlab {

// ---------------------------------------------------------------- densities

SourceDensity SourceDensity::uniform(Region region) {
  SourceDensity mu{std::move(region), {}};
  const auto n = mu.region.support_count();
  if (n == 0) throw Error(ErrorCode::EmptySet, "source region has an empty raster");
  const double value = 1.0 / (static_cast<double>(n) * mu.grid().cell_area());
  mu.f.assign(mu.grid().size(), 0.0);
  for (std::size_t k = 0; k < mu.f.size(); ++k)
    if (mu.region.in_raster(k)) mu.f[k] = value;
  return mu;
}

SourceDensity SourceDensity::checkerboard(Region region, double contrast, int block) {
  if (!(contrast >= 1.0)) throw Error(ErrorCode::InvalidArgument, "checkerboard contrast must be >= 1");
  if (block < 1) throw Error(ErrorCode::InvalidArgument, "checkerboard block must be >= 1");
  SourceDensity mu{std::move(region), {}};
  const Grid& g = mu.grid();
  mu.f.assign(g.size(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!mu.region.in_raster(k)) continue;
    const bool odd = ((g.col(k) / block) + (g.row(k) / block)) % 2 != 0;
    mu.f[k] = odd ? contrast : 1.0;
    total += mu.f[k] * g.cell_area();
  }
  if (total <= 0.0) throw Error(ErrorCode::EmptySet, "source region has an empty raster");
  for (auto& v : mu.f) v /= total;
  return mu;
}

double SourceDensity::total_mass() const {
  double s = 0.0;
  for (double v : f) s += v;
  return s * grid().cell_area();
}

double SourceDensity::lambda_bound() const {
  double bound = 1.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!region.in_raster(k)) continue;
    bound = std::max({bound, f[k], 1.0 / f[k]});
  }
  return bound;
}

// ------------------------------------------------------------------ targets

DiscreteTarget DiscreteTarget::stratified(Region parent, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "target needs at least one point");
  const Grid& g = parent.grid();
  const std::size_t cells = parent.support_count();
  if (cells == 0) throw Error(ErrorCode::EmptySet, "target region has an empty raster");
  const Point2 lo = parent.bbox_lo();
  const double width = std::max(parent.bbox_hi().x() - lo.x(), parent.bbox_hi().y() - lo.y());

  // Strata are squares of side width / k anchored at the bbox corner.
  auto stratum_of = [&](std::size_t cell, double s, int kx) {
    const Point2 c = g.center(cell);
    const int sx = static_cast<int>(std::floor((c.x() - lo.x()) / s));
    const int sy = static_cast<int>(std::floor((c.y() - lo.y()) / s));
    return static_cast<std::size_t>(sy) * static_cast<std::size_t>(kx + 1) + static_cast<std::size_t>(sx);
  };
  auto occupied = [&](int k) {
    const double s = width / k;
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(k + 1) * (k + 1), 0);
    std::size_t n = 0;
    for (std::size_t c = 0; c < g.size(); ++c) {
      if (!parent.in_raster(c)) continue;
      auto& flag = seen[stratum_of(c, s, k)];
      if (!flag) {
        flag = 1;
        ++n;
      }
    }
    return n;
  };
  int best_k = 1;
  std::size_t best_diff = std::numeric_limits<std::size_t>::max();
  const int k_max = std::max(1, std::min(g.nx, g.ny));
  for (int k = 1; k <= k_max; ++k) {
    const std::size_t n = occupied(k);
    const std::size_t diff = n > count ? n - count : count - n;
    if (diff < best_diff) {
      best_diff = diff;
      best_k = k;
    }
    if (n > 2 * count + 4) break;
  }

  const double s = width / best_k;
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(best_k + 1) * (best_k + 1));
  for (std::size_t c = 0; c < g.size(); ++c)
    if (parent.in_raster(c)) members[stratum_of(c, s, best_k)].push_back(c);

  std::mt19937_64 rng(seed);
  DiscreteTarget t{{}, {}, std::move(parent)};
  for (const auto& cellsv : members) {
    if (cellsv.empty()) continue;
    auto pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(cellsv.size()));
    pick = std::min(pick, cellsv.size() - 1);
    const Point2 c = g.center(cellsv[pick]);
    Point2 q(c.x() + (uniform01(rng) - 0.5) * g.h, c.y() + (uniform01(rng) - 0.5) * g.h);
    if (!t.parent_region.contains(q)) q = c;
    t.points.push_back(q);
    t.weights.push_back(static_cast<double>(cellsv.size()) / static_cast<double>(cells));
  }
  return t;
}

DiscreteTarget DiscreteTarget::polar(Region parent, const Point2& center, double r_in, double r_out, int rings,
                                     int per_ring, double phase) {
  if (rings < 2 || per_ring < 1 || !(r_in >= 0.0) || !(r_out > r_in)) {
    throw Error(ErrorCode::InvalidArgument, "polar target needs rings >= 2 and 0 <= r_in < r_out");
  }
  const double lo = r_in * (1.0 + 2e-5);
  const double hi = r_out * (1.0 - 2e-5);
  const double step = (hi - lo) / (rings - 1);
  DiscreteTarget t{{}, {}, std::move(parent)};
  double total = 0.0;
  for (int k = 0; k < rings; ++k) {
    const double r = lo + k * step;
    const double a = std::max(lo, r - 0.5 * step);
    const double b = std::min(hi, r + 0.5 * step);
    const double w = std::numbers::pi * (b * b - a * a) / per_ring;
    for (int m = 0; m < per_ring; ++m) {
      const double ang = phase + 2.0 * std::numbers::pi * m / per_ring;
      t.points.push_back(center + r * Vec2(std::cos(ang), std::sin(ang)));
      t.weights.push_back(w);
      total += w;
    }
  }
  for (auto& w : t.weights) w /= total;
  return t;
}

DiscreteTarget DiscreteTarget::from_points(Region parent, std::vector<Point2> points, std::vector<double> weights) {
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "target needs at least one point");
  if (weights.empty()) weights.assign(points.size(), 1.0 / static_cast<double>(points.size()));
  if (weights.size() != points.size()) throw Error(ErrorCode::InvalidArgument, "weights and points differ in length");
  return {std::move(points), std::move(weights), std::move(parent)};
}

void DiscreteTarget::validate() const {
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "empty target");
  if (weights.size() != points.size()) throw Error(ErrorCode::InvalidArgument, "weights and points differ in length");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw Error(ErrorCode::InvalidArgument, "target weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "target weights must sum to 1");
  for (const auto& p : points)
    if (!parent_region.contains(p)) throw Error(ErrorCode::InvalidArgument, "target point outside its region");
  std::vector<Point2> sorted = points;
  std::sort(sorted.begin(), sorted.end(),
            [](const Point2& a, const Point2& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i] == sorted[i - 1]) throw Error(ErrorCode::InvalidArgument, "repeated target point");
}

double DiscreteTarget::mean_spacing() const {
  return std::sqrt(parent_region.polygon_area() / static_cast<double>(points.size()));
}

// ---------------------------------------------------------------- potential

DualPotential::DualPotential(CostFunction cost, DiscreteTarget target, std::vector<double> lambda)
    : cost_(cost), target_(std::move(target)), lambda_(std::move(lambda)) {
  if (lambda_.size() != target_.size()) throw Error(ErrorCode::InvalidArgument, "λ and target sizes differ");
}

double DualPotential::value(const Point2& x) const {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < lambda_.size(); ++j) best = std::max(best, piece(j, x));
  return best;
}

DualPotential DualPotential::normalized() const {
  std::vector<double> l = lambda_;
  const double shift = l.empty() ? 0.0 : l[0];
  for (auto& v : l) v -= shift;
  return {cost_, target_, std::move(l)};
}

PotentialValue eval_potential(const DualPotential& phi, const Point2& x, double gap_tol) {
  const std::size_t n = phi.size();
  std::vector<double> v(n);
  PotentialValue out;
  out.value = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    v[j] = phi.piece(j, x);
    out.value = std::max(out.value, v[j]);
  }
  for (std::size_t j = 0; j < n; ++j)
    if (out.value - v[j] <= gap_tol) out.active.push_back(static_cast<int>(j));
  return out;
}

double default_gap_tol(const DualPotential& phi, const SourceDensity& mu) {
  const Grid& g = mu.grid();
  const auto support = mu.region.support().pixels;
  const std::size_t stride = std::max<std::size_t>(1, support.size() / 4096);
  double lip = 0.0;
  for (std::size_t s = 0; s < support.size(); s += stride) {
    const Point2 x = g.center(support[s]);
    for (const auto& y : phi.target().points)
      if (phi.cost().valid_pair(x, y)) lip = std::max(lip, phi.cost().grad_x(x, y).norm());
  }
  return 10.0 * g.h * lip;
}

// --------------------------------------------------------- pixel clipping

namespace {

struct ClipVertex {
  Vec2 p;
  int tag;  // line the edge starting here lies on; -1 for the pixel border
};

// Keeps {d : a + g·d >= 0}, tagging new edges with `tag`.
void clip(std::vector<ClipVertex>& poly, std::vector<ClipVertex>& scratch, double a, const Vec2& g, int tag) {
  scratch.clear();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const ClipVertex& u = poly[i];
    const ClipVertex& w = poly[(i + 1) % n];
    const double su = a + g.dot(u.p);
    const double sw = a + g.dot(w.p);
    const bool in_u = su >= 0.0;
    const bool in_w = sw >= 0.0;
    if (in_u) scratch.push_back(u);
    if (in_u != in_w) {
      const double t = su / (su - sw);
      const Vec2 q = u.p + t * (w.p - u.p);
      scratch.push_back({q, in_u ? tag : u.tag});
    }
  }
  poly.swap(scratch);
}

double area_of(const std::vector<ClipVertex>& poly) {
  double s = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) s += cross2(poly[i].p, poly[(i + 1) % n].p);
  return 0.5 * s;
}

// A piece is active on a pixel if it wins somewhere on the closed square:
// bisectors are relaxed by this fraction of h so that cells meeting the
// square along an edge or corner still have positive clipped area.
constexpr double kActivityRelax = 1e-7;

// Everything needed to split one pixel among the linearized pieces.
class PixelSplitter {
 public:
  PixelSplitter(const DualPotential& phi, double h, double reach) : phi_(phi), h_(h), reach_(reach) {
    values_.resize(phi.size());
  }

  // Fills `cand` with the pieces that can win somewhere in the square and
  // returns the index of the center winner.
  int candidates(const Point2& c) {
    const std::size_t n = phi_.size();
    int top = 0;
    for (std::size_t j = 0; j < n; ++j) {
      values_[j] = phi_.piece(j, c);
      if (values_[j] > values_[top]) top = static_cast<int>(j);
    }
    cand_.clear();
    grads_.clear();
    const CoVec2 pt = phi_.piece_gradient(top, c);
    const double vt = values_[top];
    for (std::size_t j = 0; j < n; ++j) {
      if (vt - values_[j] > reach_) continue;
      const CoVec2 pj = static_cast<int>(j) == top ? pt : phi_.piece_gradient(j, c);
      // Exact bound over the square, plus the activity relaxation.
      const double slack = 0.5 * h_ * ((pj - pt).cwiseAbs().sum()) + kActivityRelax * h_ * (pj - pt).norm();
      if (static_cast<int>(j) == top || values_[j] + slack >= vt) {
        cand_.push_back(static_cast<int>(j));
        grads_.push_back(pj);
      }
    }
    return top;
  }

  const std::vector<int>& cand() const { return cand_; }

  // Region of candidate slot a, clipped by all others; in local coordinates.
  // With relax > 0 every bisector is pushed outward by that distance.
  const std::vector<ClipVertex>& region(std::size_t a, double relax = 0.0) {
    const double r = 0.5 * h_;
    poly_ = {{{-r, -r}, -1}, {{r, -r}, -1}, {{r, r}, -1}, {{-r, r}, -1}};
    const int i = cand_[a];
    for (std::size_t b = 0; b < cand_.size() && !poly_.empty(); ++b) {
      if (b == a) continue;
      const int k = cand_[b];
      const Vec2 g = grads_[a] - grads_[b];
      clip(poly_, scratch_, values_[i] - values_[k] + relax * g.norm(), g, static_cast<int>(b));
    }
    return poly_;
  }

  const CoVec2& grad(std::size_t a) const { return grads_[a]; }

 private:
  const DualPotential& phi_;
  double h_;
  double reach_;
  std::vector<double> values_;
  std::vector<int> cand_;
  std::vector<CoVec2> grads_;
  std::vector<ClipVertex> poly_, scratch_;
};

// h times the largest L1 norm of a piece gradient over support centers: no
// piece whose center value trails the winner by more than this can win in the pixel.
double candidate_reach(const DualPotential& phi, const SourceDensity& mu) {
  const Grid& g = mu.grid();
  const std::size_t rows = static_cast<std::size_t>(g.ny);
  constexpr std::size_t kRowsPerChunk = 8;
  std::vector<double> partial((rows + kRowsPerChunk - 1) / kRowsPerChunk, 0.0);
  parallel_chunks(rows, kRowsPerChunk, [&](std::size_t r0, std::size_t r1) {
    double m = 0.0;
    for (std::size_t r = r0; r < r1; ++r)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t k = g.index(i, static_cast<int>(r));
        if (!mu.region.in_raster(k)) continue;
        const Point2 c = g.center(k);
        for (std::size_t j = 0; j < phi.size(); ++j) m = std::max(m, phi.piece_gradient(j, c).cwiseAbs().sum());
      }
    partial[r0 / kRowsPerChunk] = m;
  });
  double m = 0.0;
  for (double v : partial) m = std::max(m, v);
  return g.h * m * (1.0 + 1e-9) + 1e-300;
}

constexpr std::size_t kRowsPerChunk = 8;

}  // namespace

CellIntegrals integrate_cells(const DualPotential& phi, const SourceDensity& mu, bool with_hessian) {
  const Grid& g = mu.grid();
  const std::size_t n = phi.size();
  const double reach = n > 1 ? candidate_reach(phi, mu) : 0.0;
  const std::size_t rows = static_cast<std::size_t>(g.ny);
  const std::size_t n_chunks = (rows + kRowsPerChunk - 1) / kRowsPerChunk;

  struct Partial {
    std::vector<double> masses;
    std::vector<Eigen::Triplet<double>> trip;
  };
  std::vector<Partial> parts(n_chunks);

  parallel_chunks(rows, kRowsPerChunk, [&](std::size_t r0, std::size_t r1) {
    Partial& part = parts[r0 / kRowsPerChunk];
    part.masses.assign(n, 0.0);
    PixelSplitter split(phi, g.h, reach);
    for (std::size_t r = r0; r < r1; ++r) {
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t k = g.index(i, static_cast<int>(r));
        if (!mu.region.in_raster(k)) continue;
        const double f = mu.f[k];
        const int top = split.candidates(g.center(k));
        const auto& cand = split.cand();
        if (cand.size() == 1) {
          part.masses[top] += f * g.cell_area();
          continue;
        }
        for (std::size_t a = 0; a < cand.size(); ++a) {
          const auto& poly = split.region(a);
          if (poly.size() < 3) continue;
          part.masses[cand[a]] += f * area_of(poly);
          if (!with_hessian) continue;
          for (std::size_t e = 0; e < poly.size(); ++e) {
            const int b = poly[e].tag;
            // Each shared edge is visited from both sides; keep the lower slot.
            if (b < 0 || static_cast<std::size_t>(b) < a) continue;
            const double len = (poly[(e + 1) % poly.size()].p - poly[e].p).norm();
            const double dp = (split.grad(a) - split.grad(b)).norm();
            if (len <= 0.0 || dp <= 0.0) continue;
            const double w = f * len / dp;
            const int ia = cand[a], ib = cand[b];
            part.trip.emplace_back(ia, ib, -w);
            part.trip.emplace_back(ib, ia, -w);
            part.trip.emplace_back(ia, ia, w);
            part.trip.emplace_back(ib, ib, w);
          }
        }
      }
    }
  });

  CellIntegrals out;
  out.masses.assign(n, 0.0);
  std::vector<Eigen::Triplet<double>> all;
  for (auto& part : parts) {
    for (std::size_t j = 0; j < n; ++j) out.masses[j] += part.masses.empty() ? 0.0 : part.masses[j];
    if (with_hessian) all.insert(all.end(), part.trip.begin(), part.trip.end());
  }
  if (with_hessian) {
    out.hessian.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    out.hessian.setFromTriplets(all.begin(), all.end());
  }
  return out;
}

SquareActivity square_activity(const DualPotential& phi, const SourceDensity& mu) {
  const Grid& g = mu.grid();
  const std::size_t n = phi.size();
  const double reach = n > 1 ? candidate_reach(phi, mu) : 0.0;
  const std::size_t rows = static_cast<std::size_t>(g.ny);
  const std::size_t n_chunks = (rows + kRowsPerChunk - 1) / kRowsPerChunk;

  // Per chunk: (count per cell, flattened lists) for cells in row order.
  struct Partial {
    std::vector<std::uint32_t> counts;
    std::vector<int> cells;
  };
  std::vector<Partial> parts(n_chunks);
  parallel_chunks(rows, kRowsPerChunk, [&](std::size_t r0, std::size_t r1) {
    Partial& part = parts[r0 / kRowsPerChunk];
    PixelSplitter split(phi, g.h, reach);
    std::vector<int> active;
    for (std::size_t r = r0; r < r1; ++r) {
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t k = g.index(i, static_cast<int>(r));
        if (!mu.region.in_raster(k)) {
          part.counts.push_back(0);
          continue;
        }
        const int top = split.candidates(g.center(k));
        const auto& cand = split.cand();
        active.clear();
        if (cand.size() == 1) {
          active.push_back(top);
        } else {
          for (std::size_t a = 0; a < cand.size(); ++a) {
            const auto& poly = split.region(a, kActivityRelax * g.h);
            if (poly.size() >= 3 && area_of(poly) > 0.0) active.push_back(cand[a]);
          }
          if (active.empty()) active.push_back(top);
        }
        part.counts.push_back(static_cast<std::uint32_t>(active.size()));
        part.cells.insert(part.cells.end(), active.begin(), active.end());
      }
    }
  });

  SquareActivity out;
  out.grid = g;
  out.offsets.reserve(g.size() + 1);
  out.offsets.push_back(0);
  for (auto& part : parts) {
    for (auto c : part.counts) out.offsets.push_back(out.offsets.back() + c);
    out.cells.insert(out.cells.end(), part.cells.begin(), part.cells.end());
  }
  return out;
}

std::vector<int> pieces_on_square(const DualPotential& phi, const Point2& c, double h) {
  double m = 0.0;
  for (std::size_t j = 0; j < phi.size(); ++j) m = std::max(m, phi.piece_gradient(j, c).cwiseAbs().sum());
  PixelSplitter split(phi, h, h * m * (1.0 + 1e-9) + 1e-300);
  const int top = split.candidates(c);
  const auto cand = split.cand();
  std::vector<int> active;
  if (cand.size() > 1) {
    for (std::size_t a = 0; a < cand.size(); ++a) {
      const auto& poly = split.region(a, kActivityRelax * h);
      if (poly.size() >= 3 && area_of(poly) > 0.0) active.push_back(cand[a]);
    }
  }
  if (active.empty()) active.push_back(top);
  std::sort(active.begin(), active.end());
  return active;
}

LaguerreTessellation laguerre_assign(const DualPotential& phi, const SourceDensity& mu, double gap_tol) {
  const Grid& g = mu.grid();
  LaguerreTessellation t;
  t.grid = g;
  t.gap_tol = gap_tol;
  t.assignment.assign(g.size(), -1);
  t.boundary.assign(g.size(), 0);
  parallel_chunks(static_cast<std::size_t>(g.ny), kRowsPerChunk, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t k = g.index(i, static_cast<int>(r));
        if (!mu.region.in_raster(k)) continue;
        const Point2 c = g.center(k);
        double best = -std::numeric_limits<double>::infinity();
        double second = best;
        int arg = -1;
        for (std::size_t j = 0; j < phi.size(); ++j) {
          const double v = phi.piece(j, c);
          if (v > best) {
            second = best;
            best = v;
            arg = static_cast<int>(j);
          } else if (v > second) {
            second = v;
          }
        }
        t.assignment[k] = arg;
        t.boundary[k] = best - second <= gap_tol ? 1 : 0;
      }
  });
  t.masses = integrate_cells(phi, mu, false).masses;
  return t;
}

// -------------------------------------------------------------- the solver

namespace {

double max_abs_residual(const std::vector<double>& mass, const std::vector<double>& nu) {
  double r = 0.0;
  for (std::size_t j = 0; j < mass.size(); ++j) r = std::max(r, std::abs(mass[j] - nu[j]));
  return r;
}

double l2_residual(const std::vector<double>& mass, const std::vector<double>& nu) {
  double r = 0.0;
  for (std::size_t j = 0; j < mass.size(); ++j) r += (mass[j] - nu[j]) * (mass[j] - nu[j]);
  return std::sqrt(r);
}

// Raises λ_j of empty cells until every cell owns some area.
void fill_empty_cells(std::vector<double>& lambda, const CostFunction& cost, const SourceDensity& mu,
                      const DiscreteTarget& nu) {
  const Grid& g = mu.grid();
  const auto support = mu.region.support().pixels;
  const std::size_t n = nu.size();
  for (std::size_t round = 0; round <= n; ++round) {
    DualPotential phi(cost, nu, lambda);
    const auto mass = integrate_cells(phi, mu, false).masses;
    std::vector<std::size_t> empty;
    for (std::size_t j = 0; j < n; ++j)
      if (!(mass[j] > 0.0)) empty.push_back(j);
    if (empty.empty()) return;

    std::vector<double> u(support.size());
    for (std::size_t s = 0; s < support.size(); ++s) u[s] = phi.value(g.center(support[s]));
    for (auto j : empty) {
      double gap = std::numeric_limits<double>::infinity();
      std::size_t at = 0;
      for (std::size_t s = 0; s < support.size(); ++s) {
        const double d = u[s] - phi.piece(j, g.center(support[s]));
        if (d < gap) {
          gap = d;
          at = s;
        }
      }
      const Point2 c = g.center(support[at]);
      double spread = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(u[at] - phi.piece(k, c)) <= 1e-12 * (1.0 + std::abs(u[at])))
          spread = std::max(spread, (phi.piece_gradient(k, c) - phi.piece_gradient(j, c)).norm());
      }
      lambda[j] += gap + 0.25 * g.h * std::max(spread, 1e-6);
    }
  }
  throw Error(ErrorCode::NoConvergence, "could not give every target point a nonempty cell");
}

}  // namespace

DualSolveResult solve_dual(const CostFunction& cost, const SourceDensity& mu, const DiscreteTarget& nu,
                           const SolverOptions& options) {
  nu.validate();
  if (!(options.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "solver tolerance must be positive");
  const Grid& g = mu.grid();
  int components = 0;
  label_components(g, mu.region.mask(), false, &components);
  if (components != 1) {
    throw Error(ErrorCode::DisconnectedSupport,
                "source raster has " + std::to_string(components) + " components");
  }
  const std::size_t n = nu.size();
  std::vector<double> lambda(n, 0.0);
  if (n > 1) fill_empty_cells(lambda, cost, mu, nu);

  DualPotential phi(cost, nu, lambda);
  CellIntegrals cur = integrate_cells(phi, mu, n > 1);
  double res = max_abs_residual(cur.masses, nu.weights);
  double norm = l2_residual(cur.masses, nu.weights);
  const double eps0 = 0.5 * std::min(*std::min_element(cur.masses.begin(), cur.masses.end()),
                                     *std::min_element(nu.weights.begin(), nu.weights.end()));

  int it = 0;
  bool stalled = false;
  while (res > options.tol && it < options.max_iter && n > 1 && !stalled) {
    ++it;
    // Newton step on λ_1..λ_{n-1} with λ_0 fixed.
    const Eigen::Index m = static_cast<Eigen::Index>(n - 1);
    Eigen::SparseMatrix<double> H = cur.hessian.bottomRightCorner(m, m);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index j = 0; j < m; ++j) rhs[j] = nu.weights[j + 1] - cur.masses[j + 1];

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(H);
    Eigen::VectorXd step;
    if (ldlt.info() == Eigen::Success) step = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      double diag = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) diag = std::max(diag, H.coeff(j, j));
      Eigen::SparseMatrix<double> reg(m, m);
      reg.setIdentity();
      H += (1e-10 * std::max(diag, 1e-300)) * reg;
      ldlt.compute(H);
      step = ldlt.solve(rhs);
    }

    double tau = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving, tau *= 0.5) {
      std::vector<double> trial = lambda;
      for (Eigen::Index j = 0; j < m; ++j) trial[j + 1] += tau * step[j];
      DualPotential next(cost, nu, trial);
      CellIntegrals ci = integrate_cells(next, mu, true);
      const double min_mass = *std::min_element(ci.masses.begin(), ci.masses.end());
      const double nnorm = l2_residual(ci.masses, nu.weights);
      if (min_mass >= eps0 && nnorm <= (1.0 - 0.5 * tau) * norm) {
        lambda = std::move(trial);
        cur = std::move(ci);
        norm = nnorm;
        res = max_abs_residual(cur.masses, nu.weights);
        accepted = true;
        break;
      }
    }
    if (!accepted) stalled = true;
  }

  DualSolveResult out{DualPotential(cost, nu, lambda).normalized(), cur.masses, res, it, res <= options.tol};
  return out;
}

Point2 transport_map(const DualPotential& phi, const Point2& x, double gap_tol) {
  const auto pv = eval_potential(phi, x, gap_tol);
  if (pv.active.size() != 1) {
    throw Error(ErrorCode::SingularPoint, std::to_string(pv.active.size()) + " active pieces at the query point");
  }
  const int j = pv.active.front();
  const Point2& direct = phi.target().points[j];
  const Point2 via_exp = c_exp(phi.cost(), x, phi.piece_gradient(j, x));
  if ((via_exp - direct).norm() > 1e-9 * std::max(1.0, direct.norm())) {
    throw Error(ErrorCode::NoConvergence, "c-exponential of the gradient does not return the target point");
  }
  return direct;
}

double pushforward_check(const LaguerreTessellation& tess, const DiscreteTarget& nu) {
  return max_abs_residual(tess.masses, nu.weights);
}

}  // namespace otlab
