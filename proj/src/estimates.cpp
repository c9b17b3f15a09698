#include "otlab/estimates.hpp"

#include "otlab/parallel.hpp"
#include "otlab/structural.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace otlab {
namespace {

constexpr std::size_t kRowsPerChunk = 8;

double op_norm(const Mat2& m) { return Eigen::JacobiSVD<Mat2>(m).singularValues()(0); }

// u at every grid cell (NaN outside the support).
std::vector<double> potential_on_grid(const DualPotential& phi, const SourceDensity& mu) {
  const Grid& g = mu.grid();
  std::vector<double> u(g.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_chunks(static_cast<std::size_t>(g.ny), kRowsPerChunk, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t k = g.index(i, static_cast<int>(r));
        if (mu.region.in_raster(k)) u[k] = phi.value(g.center(k));
      }
  });
  return u;
}

// Distance from p to a convex hull given as 1, 2 or more points.
double hull_distance(const std::vector<CoVec2>& hull, const CoVec2& p) {
  if (hull.empty()) return std::numeric_limits<double>::infinity();
  if (hull.size() == 1) return (hull[0] - p).norm();
  if (hull.size() == 2) return distance_to_segment(p, hull[0], hull[1]);
  if (convex_contains(hull, p)) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) d = std::min(d, distance_to_segment(p, hull[i], hull[(i + 1) % hull.size()]));
  return d;
}

// Positive inside the hull (distance to its boundary), negative outside.
double signed_margin(const std::vector<CoVec2>& hull, const CoVec2& p) {
  if (hull.size() < 3) return -hull_distance(hull, p);
  return convex_contains(hull, p) ? distance_to_boundary(hull, p) : -hull_distance(hull, p);
}

}  // namespace

double loeper_check(const CostFunction& cost, const Point2& x0, const CoVec2& p0, const CoVec2& p1, const Point2& x,
                    int t_grid) {
  if (t_grid < 2) throw Error(ErrorCode::InvalidArgument, "t_grid must be at least 2");
  double best = -std::numeric_limits<double>::infinity(), ends = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < t_grid; ++k) {
    const double t = static_cast<double>(k) / (t_grid - 1);
    const Point2 xb = c_exp(cost, x0, (1.0 - t) * p0 + t * p1);
    const double f = -cost.eval(x, xb) + cost.eval(x0, xb);
    best = std::max(best, f);
    if (k == 0 || k == t_grid - 1) ends = std::max(ends, f);
  }
  return best - ends;
}

LoeperSweep loeper_sweep(const CostFunction& cost, const Region& source, const Region& target,
                         std::size_t samples, std::uint64_t seed) {
  struct Tuple {
    Point2 x0, x;
    CoVec2 p0, p1;
  };
  std::mt19937_64 rng(seed);
  std::vector<Tuple> tuples;
  tuples.reserve(samples);
  LoeperSweep r;
  while (tuples.size() < samples && r.skipped < 10 * samples + 100) {
    const Point2 x0 = sample_region(source, rng), x = sample_region(source, rng);
    const Point2 y0 = sample_region(target, rng), y1 = sample_region(target, rng);
    if (!cost.valid_pair(x0, y0) || !cost.valid_pair(x0, y1)) {
      ++r.skipped;
      continue;
    }
    tuples.push_back({x0, x, -cost.grad_x(x0, y0), -cost.grad_x(x0, y1)});
  }
  constexpr std::size_t kChunk = 256;
  std::vector<double> worst((tuples.size() + kChunk - 1) / kChunk, 0.0);
  std::vector<std::size_t> failed(worst.size(), 0);
  parallel_chunks(tuples.size(), kChunk, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      try {
        const auto& t = tuples[i];
        worst[b / kChunk] = std::max(worst[b / kChunk], loeper_check(cost, t.x0, t.p0, t.p1, t.x));
      } catch (const Error&) {
        ++failed[b / kChunk];  // the segment left the chart
      }
    }
  });
  r.evaluated = tuples.size();
  for (std::size_t c = 0; c < worst.size(); ++c) {
    r.max_violation = std::max(r.max_violation, worst[c]);
    r.skipped += failed[c];
    r.evaluated -= failed[c];
  }
  return r;
}

double c_monotonicity_check(const CostFunction& cost, const std::vector<TransportPair>& pairs) {
  const std::size_t n = pairs.size();
  if (n < 2) return 0.0;
  constexpr std::size_t kChunk = 16;
  std::vector<double> partial((n + kChunk - 1) / kChunk, 0.0);
  parallel_chunks(n, kChunk, [&](std::size_t b, std::size_t e) {
    double worst = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const auto& [x0, y0] = pairs[i];
      const double c00 = cost.eval(x0, y0);
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto& [x1, y1] = pairs[j];
        // Grouped so that equal targets cancel exactly.
        worst = std::max(worst, (c00 - cost.eval(x0, y1)) + (cost.eval(x1, y1) - cost.eval(x1, y0)));
      }
    }
    partial[b / kChunk] = worst;
  });
  return *std::max_element(partial.begin(), partial.end());
}

std::vector<TransportPair> sample_transport_pairs(const DualPotential& phi, const SourceDensity& mu,
                                                  std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> pool = mu.region.support().pixels;
  std::mt19937_64 rng(seed);
  std::vector<TransportPair> out;
  // Partial Fisher-Yates: the first i slots are the draws so far.
  for (std::size_t i = 0; i < pool.size() && out.size() < count; ++i) {
    const std::size_t j = i + std::min(pool.size() - i - 1, static_cast<std::size_t>(uniform01(rng) * (pool.size() - i)));
    std::swap(pool[i], pool[j]);
    const Point2 x = mu.grid().center(pool[i]);
    const auto v = eval_potential(phi, x, 0.0);
    if (v.active.size() == 1) out.emplace_back(x, phi.target().points[v.active[0]]);
  }
  return out;
}

Section build_section(const DualPotential& phi, const SourceDensity& mu, const Point2& focus, const Point2& base,
                      double height) {
  if (height < 0) throw Error(ErrorCode::InvalidArgument, "section height must be nonnegative");
  const CostFunction& cost = phi.cost();
  const Grid& g = mu.grid();
  Section s;
  s.focus = focus;
  s.base = base;
  s.height = height;
  const double u0 = phi.value(base);
  s.lambda0 = cost.eval(base, focus) + u0;
  s.pixels.grid = g;

  const std::size_t rows = static_cast<std::size_t>(g.ny);
  std::vector<std::vector<std::size_t>> parts((rows + kRowsPerChunk - 1) / kRowsPerChunk);
  parallel_chunks(rows, kRowsPerChunk, [&](std::size_t r0, std::size_t r1) {
    auto& part = parts[r0 / kRowsPerChunk];
    for (std::size_t r = r0; r < r1; ++r)
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t k = g.index(i, static_cast<int>(r));
        if (!mu.region.in_raster(k)) continue;
        const Point2 x = g.center(k);
        const double u = phi.value(x);
        // Roundoff allowance so that a cell where u equals m0 belongs to S_0.
        if (u <= s.m(cost, x) + 1e-12 * (1.0 + std::abs(u))) part.push_back(k);
      }
  });
  for (auto& part : parts) s.pixels.pixels.insert(s.pixels.pixels.end(), part.begin(), part.end());
  if (s.pixels.empty()) throw Error(ErrorCode::EmptySection, "no support pixel below m0 + h");
  s.volume = s.pixels.area();

  s.coord_image.reserve(s.pixels.size());
  for (std::size_t k : s.pixels.pixels) s.coord_image.push_back(-cost.grad_xbar(g.center(k), focus));
  s.hull = convex_hull(s.coord_image);
  if (s.hull.size() >= 3) {
    s.planes = minimum_width_pair(s.hull);
    s.ell = longest_chord(s.hull, s.planes.normal);
  }
  s.p0 = -cost.grad_xbar(base, focus);
  s.gap = s.m(cost, base) - u0;
  s.convexity = c_convexity_test(cost, s.pixels, focus, SetSide::source_set, 2e-2);
  return s;
}

PixelSet contact_set(const DualPotential& phi, const SourceDensity& mu, const Point2& x0, const CoVec2& p0) {
  const Grid& g = mu.grid();
  const auto sub = subdifferential_on_square(phi, x0, g.h);
  if (hull_distance(sub.hull, p0) > 1e-9 * (1.0 + p0.norm()))
    throw Error(ErrorCode::InvalidArgument, "p0 is not in the subdifferential at x0");
  const CostFunction& cost = phi.cost();
  const Point2 xb = c_exp(cost, x0, p0);
  const double u0 = phi.value(x0);
  const double lambda = cost.eval(x0, xb) + u0;
  const double tol = 0.5 * g.h * sub.diameter + 1e-9 * (1.0 + std::abs(u0));
  PixelSet out;
  out.grid = g;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!mu.region.in_raster(k)) continue;
    const Point2 x = g.center(k);
    if (phi.value(x) - (-cost.eval(x, xb) + lambda) <= tol) out.pixels.push_back(k);
  }
  return out;
}

double CConeFn::value(const CostFunction& cost, const Point2& x) const {
  double v = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < foci.size(); ++i) v = std::max(v, -cost.eval(x, foci[i]) + offsets[i]);
  return v;
}

std::vector<CoVec2> CConeFn::subdifferential() const {
  std::vector<CoVec2> out;
  for (std::size_t i = 0; i < covectors.size(); ++i)
    if (vertex_bound[i]) out.push_back(covectors[i]);
  return out;
}

CConeFn build_c_cone(const DualPotential& phi, const SourceDensity& mu, const Section& section) {
  const CostFunction& cost = phi.cost();
  const Grid& g = mu.grid();
  const Point2 x0 = section.base;
  CConeFn cone;
  cone.section = section;

  std::vector<std::uint8_t> in(g.size(), 0);
  for (std::size_t k : section.pixels.pixels) in[k] = 1;
  const auto outside_support = [&](int i, int j) {
    return i < 0 || j < 0 || i >= g.nx || j >= g.ny || !mu.region.in_raster(g.index(i, j));
  };
  const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
  for (std::size_t k : section.pixels.pixels) {
    const int i = g.col(k), j = g.row(k);
    bool edge = false;
    for (int d = 0; d < 4; ++d) {
      if (outside_support(i + di[d], j + dj[d]))
        throw Error(ErrorCode::BoundaryTouching, "section meets the boundary of the source support");
      edge = edge || !in[g.index(i + di[d], j + dj[d])];
    }
    if (edge) cone.boundary.push_back(k);
  }

  // Co-grid box: co-vectors at x0 of every target winning somewhere in S
  // and of the focus itself, with a margin.
  Point2 lo = -cost.grad_x(x0, section.focus), hi = lo;
  std::vector<std::uint8_t> seen(phi.size(), 0);
  for (std::size_t k : section.pixels.pixels) {
    for (int j : eval_potential(phi, g.center(k), 0.0).active) {
      if (seen[j]) continue;
      seen[j] = 1;
      const CoVec2 p = phi.piece_gradient(j, x0);
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  cone.step = g.h * op_norm(cost.cross_hessian(x0, section.focus));
  const double pad = 0.25 * (hi - lo).maxCoeff() + 3.0 * cone.step;
  lo.array() -= pad;
  hi.array() += pad;
  constexpr int kMaxSide = 400;
  cone.step = std::max(cone.step, (hi - lo).maxCoeff() / kMaxSide);
  cone.grid_nx = static_cast<int>(std::ceil((hi.x() - lo.x()) / cone.step)) + 1;
  cone.grid_ny = static_cast<int>(std::ceil((hi.y() - lo.y()) / cone.step)) + 1;

  const double u0 = phi.value(x0);
  // Constraint points on ∂S: on the segment from a boundary pixel center to
  // each outside neighbour (diagonals included), the zero of u - m0 - h found
  // by bisection on the exact potential. Outside neighbours below the level
  // (S cut by a window) use the midpoint.
  std::vector<Point2> bpts;
  std::vector<double> bm;
  const auto level = [&](const Point2& x) { return phi.value(x) - section.m(cost, x); };
  for (std::size_t k : cone.boundary) {
    const Point2 ck = g.center(k);
    const double gk = level(ck);
    for (int dj8 = -1; dj8 <= 1; ++dj8)
      for (int di8 = -1; di8 <= 1; ++di8) {
        const int ni = g.col(k) + di8, nj = g.row(k) + dj8;
        if ((di8 == 0 && dj8 == 0) || ni < 0 || nj < 0 || ni >= g.nx || nj >= g.ny) continue;
        const std::size_t n = g.index(ni, nj);
        if (in[n]) continue;
        const Point2 cn = g.center(n);
        Point2 x = 0.5 * (ck + cn);
        if (gk <= 0 && level(cn) > 0) {
          double a = 0.0, b = 1.0;
          for (int it = 0; it < 40; ++it) {
            const double mid = 0.5 * (a + b);
            (level(ck + mid * (cn - ck)) > 0 ? b : a) = mid;
          }
          x = ck + a * (cn - ck);
        }
        bpts.push_back(x);
        bm.push_back(section.m(cost, x));
      }
  }
  cone.boundary_points = bpts;

  const std::size_t total = static_cast<std::size_t>(cone.grid_nx) * static_cast<std::size_t>(cone.grid_ny);
  std::vector<std::uint8_t> ok(total, 0), bound(total, 0);
  std::vector<Point2> foci(total);
  std::vector<double> offs(total);
  parallel_chunks(total, 256, [&](std::size_t b, std::size_t e) {
    for (std::size_t q = b; q < e; ++q) {
      const CoVec2 p(lo.x() + static_cast<double>(q % cone.grid_nx) * cone.step,
                     lo.y() + static_cast<double>(q / cone.grid_nx) * cone.step);
      Point2 xb;
      try {
        xb = c_exp(cost, x0, p);
      } catch (const Error&) {
        continue;
      }
      if (!cost.valid_pair(x0, xb)) continue;
      const double at_vertex = u0 + cost.eval(x0, xb);
      double at_boundary = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < bpts.size(); ++a) at_boundary = std::min(at_boundary, bm[a] + cost.eval(bpts[a], xb));
      ok[q] = 1;
      foci[q] = xb;
      offs[q] = std::min(at_vertex, at_boundary);
      bound[q] = at_vertex <= at_boundary;
    }
  });
  cone.slot.assign(total, -1);
  for (std::size_t q = 0; q < total; ++q) {
    if (!ok[q]) continue;
    cone.slot[q] = static_cast<int>(cone.covectors.size());
    cone.covectors.emplace_back(lo.x() + static_cast<double>(q % cone.grid_nx) * cone.step,
                                lo.y() + static_cast<double>(q / cone.grid_nx) * cone.step);
    cone.foci.push_back(foci[q]);
    cone.offsets.push_back(offs[q]);
    cone.vertex_bound.push_back(bound[q]);
  }
  return cone;
}

ConeInclusion check_cone(const DualPotential& phi, const SourceDensity& mu, const CConeFn& cone) {
  const CostFunction& cost = phi.cost();
  const Grid& g = mu.grid();
  const auto u = potential_on_grid(phi, mu);
  const auto support = mu.region.support().pixels;
  std::vector<std::uint8_t> in(g.size(), 0);
  for (std::size_t k : cone.section.pixels.pixels) in[k] = 1;

  // Pixel where u + c(., x̄) is smallest, i.e. where the c-affine function with focus x̄ supports u.
  std::vector<long> argmin(cone.covectors.size(), -1);
  const auto support_point = [&](int s) {
    if (argmin[s] < 0) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k : support) {
        const double v = u[k] + cost.eval(g.center(k), cone.foci[s]);
        if (v < best) {
          best = v;
          argmin[s] = static_cast<long>(k);
        }
      }
    }
    return static_cast<std::size_t>(argmin[s]);
  };

  std::vector<std::size_t> members;
  for (std::size_t q = 0; q < cone.slot.size(); ++q)
    if (cone.slot[q] >= 0 && cone.vertex_bound[cone.slot[q]]) members.push_back(q);
  constexpr std::size_t kMaxChecks = 512;
  const std::size_t stride = std::max<std::size_t>(1, (members.size() + kMaxChecks - 1) / kMaxChecks);

  ConeInclusion r;
  for (std::size_t m = 0; m < members.size(); m += stride) {
    const std::size_t q = members[m];
    const int qi = static_cast<int>(q % cone.grid_nx), qj = static_cast<int>(q / cone.grid_nx);
    bool found = in[support_point(cone.slot[q])] != 0;
    for (int dj = -1; dj <= 1 && !found; ++dj)
      for (int di = -1; di <= 1 && !found; ++di) {
        const int ni = qi + di, nj = qj + dj;
        if (ni < 0 || nj < 0 || ni >= cone.grid_nx || nj >= cone.grid_ny) continue;
        const int s = cone.slot[static_cast<std::size_t>(nj) * cone.grid_nx + ni];
        if (s >= 0 && in[support_point(s)]) found = true;
      }
    ++r.checked;
    if (!found) ++r.failures;
  }

  const Point2 x0 = cone.section.base;
  const CoVec2 pc = -cost.grad_x(x0, cone.section.focus);
  r.margin = signed_margin(convex_hull(cone.subdifferential()), pc);

  // C = max over boundary pixels of |∂/∂p̄ (-c(y, x̄(p̄)) + c(x0, x̄(p̄)))| at pc.
  const double eps = 1e-6 * (1.0 + pc.norm());
  double c_max = 0.0;
  for (const Point2& y : cone.boundary_points) {
    Vec2 d;
    for (int a = 0; a < 2; ++a) {
      const Point2 xp = c_exp(cost, x0, pc + eps * Vec2::Unit(a));
      const Point2 xm = c_exp(cost, x0, pc - eps * Vec2::Unit(a));
      d[a] = ((-cost.eval(y, xp) + cost.eval(x0, xp)) - (-cost.eval(y, xm) + cost.eval(x0, xm))) / (2 * eps);
    }
    c_max = std::max(c_max, d.norm());
  }
  r.predicted_margin = c_max > 0 ? cone.section.gap / c_max : std::numeric_limits<double>::infinity();
  return r;
}

AleksandrovResult aleksandrov_check(const DualPotential& phi, const SourceDensity& mu,
                                    const std::vector<Section>& sections, const std::optional<Witness>& witness) {
  const double h = mu.grid().h;
  AleksandrovResult r;
  for (const auto& s : sections) {
    if (s.gap <= 0.0) {
      r.ratios.push_back(0.0);
      continue;
    }
    if (s.hull.size() < 3 || s.ell < 2.0 * h)
      throw Error(ErrorCode::DegenerateSection, "longest orthogonal chord below two mesh cells");
    const double d = s.plane_distance();
    r.ratios.push_back(d > 0 ? s.gap * s.gap * s.ell / (d * s.volume * s.volume)
                             : std::numeric_limits<double>::infinity());
  }

  if (witness && !sections.empty()) {
    const CostFunction& cost = phi.cost();
    const Point2 x0 = sections.front().base;
    const auto sub = subdifferential_on_square(phi, x0, h);
    const Region& spt = phi.target().parent_region;
    // Coordinates at x0 of the boundary of spt ν, edges subdivided to the target mesh.
    double dist = std::numeric_limits<double>::infinity();
    for (const auto& ring : spt.rings()) {
      std::vector<CoVec2> img;
      for (std::size_t i = 0; i < ring.size(); ++i) {
        const Point2& a = ring[i];
        const Point2& b = ring[(i + 1) % ring.size()];
        const int pieces = std::max(1, static_cast<int>(std::ceil((b - a).norm() / spt.h())));
        for (int t = 0; t < pieces; ++t) {
          const Point2 y = a + (b - a) * (static_cast<double>(t) / pieces);
          if (cost.valid_pair(x0, y)) img.push_back(-cost.grad_x(x0, y));
        }
      }
      for (std::size_t i = 0; i < img.size(); ++i)
        dist = std::min(dist, distance_to_segment(witness->p, img[i], img[(i + 1) % img.size()]));
    }
    bool inside = false;
    try {
      inside = spt.contains(c_exp(cost, x0, witness->p));
    } catch (const Error&) {
      inside = false;
    }
    r.witness_distance = inside ? dist : -dist;
    const bool in_sub = hull_distance(sub.hull, witness->p) <= 1e-9 * (1.0 + witness->p.norm());
    r.witness_valid = in_sub && inside && dist >= witness->delta;
  }
  return r;
}

std::vector<CConeFn> random_cones(const DualPotential& phi, const SourceDensity& mu, std::size_t count,
                                  std::uint64_t seed, double h_lo, double h_hi) {
  const CostFunction& cost = phi.cost();
  const Grid& g = mu.grid();
  const auto support = mu.region.support().pixels;
  std::mt19937_64 rng(seed);
  std::vector<CConeFn> out;
  for (std::size_t attempt = 0; attempt < 50 * count && out.size() < count; ++attempt) {
    const std::size_t k = support[std::min(support.size() - 1, static_cast<std::size_t>(uniform01(rng) * support.size()))];
    const Point2 x0 = g.center(k);
    const auto sub = subdifferential_on_square(phi, x0, g.h);
    // A random convex combination of the hull vertices: interior to ∂u(x0) when it has interior.
    CoVec2 p = CoVec2::Zero();
    double total = 0.0;
    for (const CoVec2& v : sub.hull) {
      const double w = uniform01(rng) + 1e-3;
      p += w * v;
      total += w;
    }
    p /= total;
    const double height = h_lo + (h_hi - h_lo) * uniform01(rng);
    try {
      const Point2 focus = c_exp(cost, x0, p);
      out.push_back(build_c_cone(phi, mu, build_section(phi, mu, focus, x0, height)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BoundaryTouching && e.code() != ErrorCode::OutOfChart &&
          e.code() != ErrorCode::EmptySection)
        throw;
    }
  }
  return out;
}

}  // namespace otlab
