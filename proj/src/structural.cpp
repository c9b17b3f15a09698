#include "otlab/structural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace otlab {

Point2 sample_region(const Region& region, std::mt19937_64& rng) {
  const auto& mask = region.mask();
  const std::size_t n = region.support_count();
  if (n == 0) throw Error(ErrorCode::EmptySet, "cannot sample an empty region");
  // Rejection on the grid is cheap for the preset shapes.
  const Grid& g = region.grid();
  for (;;) {
    const std::size_t k = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(g.size()));
    if (k >= g.size() || !mask[k]) continue;
    const Point2 c = g.center(k);
    return {c.x() + (uniform01(rng) - 0.5) * g.h, c.y() + (uniform01(rng) - 0.5) * g.h};
  }
}

StructuralReport verify_structural(const CostFunction& cost, const Region& source, const Region& target,
                                   std::size_t samples, std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "verify_structural needs at least one sample");
  std::mt19937_64 rng(seed);
  StructuralReport rep;
  rep.samples = samples;
  rep.min_abs_det = std::numeric_limits<double>::infinity();
  rep.min_mtw = std::numeric_limits<double>::infinity();
  rep.min_cogradient_separation = std::numeric_limits<double>::infinity();

  std::vector<Point2> xs, xbars;
  xs.reserve(samples);
  xbars.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    const Point2 x = sample_region(source, rng);
    const Point2 xb = sample_region(target, rng);
    if (!cost.valid_pair(x, xb)) {
      ++rep.skipped_invalid;
      continue;
    }
    xs.push_back(x);
    xbars.push_back(xb);

    rep.min_abs_det = std::min(rep.min_abs_det, std::abs(cost.cross_hessian(x, xb).determinant()));

    const double angle = 2.0 * std::numbers::pi * uniform01(rng);
    const Vec2 v(std::cos(angle), std::sin(angle));
    const auto e = MtwEvaluation::make(x, xb, v, perp(v));
    try {
      const double m = mtw_term(cost, e);
      if (m < rep.min_mtw) {
        rep.min_mtw = m;
        rep.worst_mtw = e;
        rep.worst_mtw.value = m;
      }
    } catch (const Error&) {
      ++rep.skipped_invalid;
    }
  }

  // Twist: co-gradients of distinct sampled targets seen from a few base points.
  const std::size_t n_targets = std::min<std::size_t>(xbars.size(), 2000);
  const std::size_t n_bases = std::min<std::size_t>(xs.size(), 16);
  std::vector<Vec2> cograds(n_targets);
  std::vector<std::size_t> which(n_targets);
  for (std::size_t b = 0; b < n_bases; ++b) {
    const Point2& x = xs[b];
    std::size_t used = 0;
    for (std::size_t t = 0; t < n_targets; ++t) {
      if (!cost.valid_pair(x, xbars[t])) continue;
      which[used] = t;
      cograds[used++] = -cost.grad_x(x, xbars[t]);
    }
    for (std::size_t i = 0; i < used; ++i) {
      for (std::size_t j = i + 1; j < used; ++j) {
        if ((xbars[which[i]] - xbars[which[j]]).norm() <= kTwistCollisionRadius) continue;
        const double d = (cograds[i] - cograds[j]).norm();
        rep.min_cogradient_separation = std::min(rep.min_cogradient_separation, d);
        if (d <= kTwistCollisionRadius) ++rep.twist_collisions;
      }
    }
  }
  rep.twist_ok = rep.twist_collisions == 0;
  rep.nondeg_ok = rep.min_abs_det > 0.0 && std::isfinite(rep.min_abs_det);
  rep.mtw_ok = rep.min_mtw >= -kMtwSlack;
  return rep;
}

}  // namespace otlab
