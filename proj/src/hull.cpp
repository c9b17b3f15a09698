#include "otlab/hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace otlab {

std::vector<Vec2> convex_hull(std::span<const Vec2> points) {
  std::vector<Vec2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    const auto& p = pts[i];
    while (k >= t && cross2(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

double polygon_area(std::span<const Vec2> poly) {
  if (poly.size() < 3) return 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross2(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

double diameter(std::span<const Vec2> points) {
  const auto hull = convex_hull(points);
  double d = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j) d = std::max(d, (hull[i] - hull[j]).norm());
  return d;
}

int affine_dimension(std::span<const Vec2> points, double diameter_threshold, double area_threshold) {
  const auto hull = convex_hull(points);
  if (polygon_area(hull) > area_threshold) return 2;
  double d = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j) d = std::max(d, (hull[i] - hull[j]).norm());
  return d > diameter_threshold ? 1 : 0;
}

SupportingPair minimum_width_pair(std::span<const Vec2> hull) {
  if (hull.size() < 3) throw Error(ErrorCode::InvalidArgument, "minimum width needs a 2-D hull");
  SupportingPair best;
  double best_width = std::numeric_limits<double>::infinity();
  const std::size_t n = hull.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 edge = hull[(i + 1) % n] - hull[i];
    const double len = edge.norm();
    if (len == 0.0) continue;
    // Inward normal of a counter-clockwise edge.
    const Vec2 normal = perp(edge) / len;
    const double lo = normal.dot(hull[i]);
    double hi = lo;
    for (const auto& p : hull) hi = std::max(hi, normal.dot(p));
    if (hi - lo < best_width) {
      best_width = hi - lo;
      best = {normal, lo, hi};
    }
  }
  return best;
}

double longest_chord(std::span<const Vec2> hull, const Vec2& dir_in) {
  const Vec2 dir = dir_in.normalized();
  const Vec2 across = perp(dir);
  const std::size_t n = hull.size();
  if (n < 3) return 0.0;
  // The chord length along dir is concave in the offset along `across`,
  // piecewise linear with breakpoints at vertex offsets.
  double best = 0.0;
  for (const auto& v : hull) {
    const double s = across.dot(v);
    double tmin = std::numeric_limits<double>::infinity();
    double tmax = -tmin;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = hull[i];
      const Vec2& b = hull[(i + 1) % n];
      const double sa = across.dot(a) - s, sb = across.dot(b) - s;
      if ((sa > 0 && sb > 0) || (sa < 0 && sb < 0)) continue;
      if (sa == sb) {
        tmin = std::min({tmin, dir.dot(a), dir.dot(b)});
        tmax = std::max({tmax, dir.dot(a), dir.dot(b)});
        continue;
      }
      const Vec2 q = a + (sa / (sa - sb)) * (b - a);
      tmin = std::min(tmin, dir.dot(q));
      tmax = std::max(tmax, dir.dot(q));
    }
    if (tmax > tmin) best = std::max(best, tmax - tmin);
  }
  return best;
}

bool convex_contains(std::span<const Vec2> hull, const Vec2& p, double eps) {
  const std::size_t n = hull.size();
  if (n == 0) return false;
  if (n == 1) return (p - hull[0]).norm() <= eps;
  if (n == 2) return distance_to_segment(p, hull[0], hull[1]) <= eps;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = hull[(i + 1) % n] - hull[i];
    if (cross2(e, p - hull[i]) < -eps * e.norm()) return false;
  }
  return true;
}

double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double distance_to_boundary(std::span<const Vec2> hull, const Vec2& p) {
  const std::size_t n = hull.size();
  if (n == 0) return std::numeric_limits<double>::infinity();
  if (n == 1) return (p - hull[0]).norm();
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) d = std::min(d, distance_to_segment(p, hull[i], hull[(i + 1) % n]));
  return d;
}

}  // namespace otlab
