#include "otlab/singular.hpp"

#include "otlab/hull.hpp"
#include "otlab/parallel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace otlab {
namespace {

double op_norm(const Mat2& m) { return Eigen::JacobiSVD<Mat2>(m).singularValues()(0); }

// Every support cell up to ~4096 of them, evenly strided.
std::vector<std::size_t> sample_support(const SourceDensity& mu) {
  const PixelSet s = mu.region.support();
  const std::size_t stride = std::max<std::size_t>(1, s.size() / 4096);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.size(); i += stride) out.push_back(s.pixels[i]);
  return out;
}

double hull_diameter(const DualPotential& phi, const Point2& x, std::span<const int> active) {
  double d = 0.0;
  for (std::size_t a = 0; a < active.size(); ++a) {
    const CoVec2 pa = phi.piece_gradient(active[a], x);
    for (std::size_t b = a + 1; b < active.size(); ++b) d = std::max(d, (pa - phi.piece_gradient(active[b], x)).norm());
  }
  return d;
}

}  // namespace

SubdifferentialPolytope make_polytope(const DualPotential& phi, const Point2& x0, std::vector<int> active,
                                      double h_mesh) {
  SubdifferentialPolytope s;
  s.base = x0;
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());
  s.active = std::move(active);
  for (int j : s.active) {
    s.vertices.push_back(phi.piece_gradient(j, x0));
    s.image_points.push_back(phi.target().points[j]);
  }
  s.hull = convex_hull(s.vertices);
  s.area = polygon_area(s.hull);
  s.diameter = diameter(s.hull);
  const double t = 10.0 * h_mesh;
  s.affine_dim = affine_dimension(s.vertices, t, t * t);
  return s;
}

SubdifferentialPolytope subdifferential_at(const DualPotential& phi, const Point2& x0, double gap_tol,
                                           double h_mesh) {
  return make_polytope(phi, x0, eval_potential(phi, x0, gap_tol).active, h_mesh);
}

SubdifferentialPolytope subdifferential_on_square(const DualPotential& phi, const Point2& x0, double h_mesh) {
  return make_polytope(phi, x0, pieces_on_square(phi, x0, h_mesh), h_mesh);
}

double macroscopic_threshold(const DualPotential& phi, const SourceDensity& mu) {
  double lip = 0.0, cross = 0.0;
  for (std::size_t k : sample_support(mu)) {
    const Point2 x = mu.grid().center(k);
    for (const Point2& y : phi.target().points) {
      lip = std::max(lip, op_norm(phi.cost().hess_x(x, y)));
      cross = std::max(cross, op_norm(phi.cost().cross_hessian(x, y)));
    }
  }
  // A jump across half the target is never a boundary between neighbours,
  // which matters for targets with only a handful of points.
  const double spread = diameter(std::span<const Vec2>(phi.target().points)) * cross;
  return std::max(10.0 * mu.grid().h * lip, std::min(4.0 * phi.target().mean_spacing() * cross, 0.5 * spread));
}

double max_source_hessian(const DualPotential& phi, const SourceDensity& mu) {
  double lip = 0.0;
  for (std::size_t k : sample_support(mu))
    for (const Point2& y : phi.target().points) lip = std::max(lip, op_norm(phi.cost().hess_x(mu.grid().center(k), y)));
  return lip;
}

double SingularSet::jump_at(const DualPotential& phi, std::size_t k) const {
  return hull_diameter(phi, grid.center(k), activity.at(k));
}

SingularSet singular_set(const DualPotential& phi, const SourceDensity& mu, double threshold) {
  SingularSet s;
  s.grid = mu.grid();
  s.threshold = threshold;
  s.activity = square_activity(phi, mu);
  const Grid& g = s.grid;

  std::vector<std::uint8_t> mask(g.size(), 0);
  parallel_chunks(g.size(), 4096, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k)
      if (s.activity.at(k).size() >= 2 && s.jump_at(phi, k) > threshold) mask[k] = 1;
  });
  for (std::size_t k = 0; k < g.size(); ++k)
    if (mask[k]) s.pixels.push_back(k);

  int count = 0;
  const std::vector<int> label = label_components(g, mask, true, &count);
  s.components.resize(static_cast<std::size_t>(count));
  std::vector<double> best(s.components.size(), -1.0);
  for (std::size_t k : s.pixels) {
    const int c = label[k];
    s.component.push_back(c);
    auto& comp = s.components[static_cast<std::size_t>(c)];
    comp.pixels.push_back(k);
    const double jump = s.jump_at(phi, k);
    if (jump > best[static_cast<std::size_t>(c)]) {
      best[static_cast<std::size_t>(c)] = jump;
      comp.representative = k;
    }
  }
  for (auto& comp : s.components) {
    int i0 = g.nx, i1 = -1, j0 = g.ny, j1 = -1;
    std::vector<Vec2> centers;
    for (std::size_t k : comp.pixels) {
      i0 = std::min(i0, g.col(k));
      i1 = std::max(i1, g.col(k));
      j0 = std::min(j0, g.row(k));
      j1 = std::max(j1, g.row(k));
      centers.push_back(g.center(k));
    }
    comp.extent_x = i1 - i0 + 1;
    comp.extent_y = j1 - j0 + 1;
    comp.diameter = diameter(convex_hull(centers));
  }
  return s;
}

std::size_t IsolationReport::isolated_count() const {
  return static_cast<std::size_t>(
      std::count_if(components.begin(), components.end(), [](const auto& c) { return c.is_isolated; }));
}

bool IsolationReport::violation() const {
  return std::any_of(components.begin(), components.end(),
                     [](const auto& c) { return c.hole_consistency == Consistency::violation; });
}

IsolationReport isolation_report(const SingularSet& s, const DualPotential& phi, const SourceDensity& mu) {
  IsolationReport rep;
  const Grid& g = s.grid;
  rep.hole_count = detect_holes(phi.target().parent_region).count();

  std::vector<int> label(g.size(), -1);
  for (std::size_t i = 0; i < s.pixels.size(); ++i) label[s.pixels[i]] = s.component[i];

  for (std::size_t c = 0; c < s.components.size(); ++c) {
    const auto& comp = s.components[c];
    ComponentVerdict v;
    v.component = c;
    bool isolated = comp.extent_x <= kIsolatedExtent && comp.extent_y <= kIsolatedExtent;
    for (std::size_t a = 0; isolated && a < comp.pixels.size(); ++a) {
      const int i = g.col(comp.pixels[a]), j = g.row(comp.pixels[a]);
      for (int dj = -kIsolationRing; isolated && dj <= kIsolationRing; ++dj)
        for (int di = -kIsolationRing; di <= kIsolationRing; ++di) {
          const int ni = i + di, nj = j + dj;
          if (ni < 0 || nj < 0 || ni >= g.nx || nj >= g.ny) continue;
          const int other = label[g.index(ni, nj)];
          if (other >= 0 && other != static_cast<int>(c)) {
            isolated = false;
            break;
          }
        }
    }
    v.is_isolated = isolated;
    v.representative = g.center(comp.representative);

    const auto rep_active = s.activity.at(comp.representative);
    v.pixel_affine_dim =
        make_polytope(phi, v.representative, {rep_active.begin(), rep_active.end()}, mu.grid().h).affine_dim;
    std::vector<int> all;
    for (std::size_t k : comp.pixels) {
      const auto act = s.activity.at(k);
      all.insert(all.end(), act.begin(), act.end());
    }
    v.polytope = make_polytope(phi, v.representative, std::move(all), mu.grid().h);
    v.affine_dim = v.polytope.affine_dim;
    if (v.is_isolated && v.affine_dim == 2)
      v.hole_consistency = rep.hole_count >= 1 ? Consistency::consistent : Consistency::violation;
    rep.components.push_back(std::move(v));
  }
  return rep;
}

double hole_fill_distance(const CostFunction& cost, const SubdifferentialPolytope& poly, const Hole& hole,
                          double step) {
  if (poly.hull.size() < 3 || hole.boundary.empty() || !(step > 0))
    throw Error(ErrorCode::InvalidArgument, "hole_fill_distance needs a 2-d hull and a nonempty hole");
  std::vector<Point2> image;
  for (std::size_t i = 0; i < poly.hull.size(); ++i) {
    const CoVec2& a = poly.hull[i];
    const CoVec2& b = poly.hull[(i + 1) % poly.hull.size()];
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a).norm() / step)));
    for (int k = 0; k < pieces; ++k) image.push_back(c_exp(cost, poly.base, a + (b - a) * (double(k) / pieces)));
  }
  auto directed = [](const std::vector<Point2>& from, const std::vector<Point2>& to) {
    double worst = 0.0;
    for (const Point2& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Point2& q : to) best = std::min(best, (p - q).squaredNorm());
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  return std::max(directed(image, hole.boundary), directed(hole.boundary, image));
}

double propagation_check(const DualPotential& phi, const SourceDensity& mu, const Point2& x0, double radius) {
  const Grid& g = mu.grid();
  const double h = g.h;
  const auto poly = subdifferential_on_square(phi, x0, h);
  if (poly.active.size() < 2) throw Error(ErrorCode::NotSingular, "a single piece is active at x0");

  struct Sample {
    Point2 x;
    CoVec2 du;
  };
  std::vector<Sample> smooth;
  const int i0 = std::max(0, static_cast<int>(std::floor((x0.x() - radius - g.x0) / h)));
  const int i1 = std::min(g.nx - 1, static_cast<int>(std::floor((x0.x() + radius - g.x0) / h)));
  const int j0 = std::max(0, static_cast<int>(std::floor((x0.y() - radius - g.y0) / h)));
  const int j1 = std::min(g.ny - 1, static_cast<int>(std::floor((x0.y() + radius - g.y0) / h)));
  for (int j = j0; j <= j1; ++j)
    for (int i = i0; i <= i1; ++i) {
      const std::size_t k = g.index(i, j);
      const Point2 c = g.center(k);
      if (!mu.region.in_raster(k) || (c - x0).norm() > radius) continue;
      // u is differentiable wherever a single piece attains the max.
      const auto act = eval_potential(phi, c, 0.0).active;
      if (act.size() == 1) smooth.push_back({c, phi.piece_gradient(act[0], c)});
    }
  if (smooth.empty()) throw Error(ErrorCode::NoPuncturedNeighborhood, "no differentiability pixel within radius");

  double gap = 0.0;
  for (const CoVec2& p : poly.hull) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : smooth) best = std::min(best, (s.du - p).norm());
    gap = std::max(gap, best);
  }
  return gap;
}

}  // namespace otlab
