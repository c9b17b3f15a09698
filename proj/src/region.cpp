#include "otlab/region.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>

namespace otlab {

std::optional<std::size_t> Grid::locate(const Point2& p) const {
  const double fi = std::floor((p.x() - x0) / h);
  const double fj = std::floor((p.y() - y0) / h);
  if (fi < 0 || fj < 0 || fi >= nx || fj >= ny) return std::nullopt;
  return index(static_cast<int>(fi), static_cast<int>(fj));
}

double signed_area(const Ring& ring) {
  double a = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) a += cross2(ring[i], ring[(i + 1) % n]);
  return 0.5 * a;
}

namespace {

bool segments_intersect(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  auto orient = [](const Point2& p, const Point2& q, const Point2& r) {
    const double v = cross2(q - p, r - p);
    return (v > 0) - (v < 0);
  };
  auto on_segment = [](const Point2& p, const Point2& q, const Point2& r) {
    return std::min(p.x(), q.x()) <= r.x() && r.x() <= std::max(p.x(), q.x()) &&
           std::min(p.y(), q.y()) <= r.y() && r.y() <= std::max(p.y(), q.y());
  };
  const int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

// x-coordinate where edge (a, b) crosses the horizontal line at y, if it does
// under the half-open rule shared by the rasterizer and the point test.
inline std::optional<double> crossing(const Point2& a, const Point2& b, double y) {
  if ((a.y() > y) == (b.y() > y)) return std::nullopt;
  return a.x() + (y - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
}

bool ring_contains(const Ring& ring, const Point2& p) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = crossing(ring[i], ring[(i + 1) % n], p.y());
    if (x && *x > p.x()) inside = !inside;
  }
  return inside;
}

// Sutherland-Hodgman clip of a ring against an axis-aligned box. The signed
// area of the output equals the signed area of ring ∩ box.
Ring clip_to_box(const Ring& ring, const Point2& lo, const Point2& hi) {
  Ring out = ring;
  for (int side = 0; side < 4; ++side) {
    if (out.empty()) break;
    Ring in;
    in.swap(out);
    auto inside = [&](const Point2& p) {
      switch (side) {
        case 0: return p.x() >= lo.x();
        case 1: return p.x() <= hi.x();
        case 2: return p.y() >= lo.y();
        default: return p.y() <= hi.y();
      }
    };
    auto intersect = [&](const Point2& a, const Point2& b) {
      double t;
      switch (side) {
        case 0: t = (lo.x() - a.x()) / (b.x() - a.x()); break;
        case 1: t = (hi.x() - a.x()) / (b.x() - a.x()); break;
        case 2: t = (lo.y() - a.y()) / (b.y() - a.y()); break;
        default: t = (hi.y() - a.y()) / (b.y() - a.y()); break;
      }
      return Point2(a + t * (b - a));
    };
    const std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2& cur = in[i];
      const Point2& prev = in[(i + n - 1) % n];
      const bool ci = inside(cur), pi = inside(prev);
      if (ci) {
        if (!pi) out.push_back(intersect(prev, cur));
        out.push_back(cur);
      } else if (pi) {
        out.push_back(intersect(prev, cur));
      }
    }
  }
  return out;
}

}  // namespace

bool ring_is_simple(const Ring& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = ring[i];
    const Point2& b = ring[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(a, b, ring[j], ring[(j + 1) % n])) return false;
    }
  }
  return true;
}

Region::Region(std::vector<Ring> rings, double h) : rings_(std::move(rings)) {
  if (rings_.empty()) throw Error(ErrorCode::InvalidArgument, "region needs at least one ring");
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "raster step must be positive");
  for (const auto& r : rings_) {
    if (!ring_is_simple(r)) throw Error(ErrorCode::InvalidArgument, "ring is not a simple polygon");
  }
  // Outer boundaries CCW, holes CW, by nesting depth.
  for (std::size_t i = 0; i < rings_.size(); ++i) {
    int depth = 0;
    for (std::size_t j = 0; j < rings_.size(); ++j) {
      if (i != j && ring_contains(rings_[j], rings_[i].front())) ++depth;
    }
    const bool hole = depth % 2 == 1;
    if ((signed_area(rings_[i]) > 0) == hole) std::reverse(rings_[i].begin(), rings_[i].end());
  }

  lo_ = rings_.front().front();
  hi_ = lo_;
  for (const auto& r : rings_) {
    for (const auto& p : r) {
      lo_ = lo_.cwiseMin(p);
      hi_ = hi_.cwiseMax(p);
    }
  }
  grid_.h = h;
  grid_.x0 = lo_.x();
  grid_.y0 = lo_.y();
  grid_.nx = std::max(1, static_cast<int>(std::ceil((hi_.x() - lo_.x()) / h - 1e-9)));
  grid_.ny = std::max(1, static_cast<int>(std::ceil((hi_.y() - lo_.y()) / h - 1e-9)));
  mask_.assign(grid_.size(), 0);

  std::vector<double> xs;
  for (int j = 0; j < grid_.ny; ++j) {
    const double y = grid_.center(0, j).y();
    xs.clear();
    for (const auto& r : rings_) {
      const std::size_t n = r.size();
      for (std::size_t e = 0; e < n; ++e) {
        if (const auto x = crossing(r[e], r[(e + 1) % n], y)) xs.push_back(*x);
      }
    }
    std::sort(xs.begin(), xs.end());
    std::size_t at_or_left = 0;
    for (int i = 0; i < grid_.nx; ++i) {
      const double cx = grid_.center(i, j).x();
      while (at_or_left < xs.size() && xs[at_or_left] <= cx) ++at_or_left;
      if ((xs.size() - at_or_left) % 2 == 1) {
        mask_[grid_.index(i, j)] = 1;
        ++support_count_;
      }
    }
  }
}

Region Region::with_resolution(std::vector<Ring> rings, int resolution) {
  if (resolution < 1) throw Error(ErrorCode::InvalidArgument, "resolution must be positive");
  Point2 lo = rings.at(0).at(0), hi = lo;
  for (const auto& r : rings)
    for (const auto& p : r) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  const double side = std::max(hi.x() - lo.x(), hi.y() - lo.y());
  return Region(std::move(rings), side / resolution);
}

Region Region::with_default_step(std::vector<Ring> rings) {
  Point2 lo = rings.at(0).at(0), hi = lo;
  for (const auto& r : rings)
    for (const auto& p : r) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  return Region(std::move(rings), (hi - lo).norm() / 512.0);
}

bool Region::contains(const Point2& p) const {
  bool inside = false;
  for (const auto& r : rings_) {
    if (ring_contains(r, p)) inside = !inside;
  }
  return inside;
}

bool Region::raster_contains(const Point2& p) const {
  const auto k = grid_.locate(p);
  return k && mask_[*k] != 0;
}

double Region::polygon_area() const {
  double a = 0.0;
  for (const auto& r : rings_) a += signed_area(r);
  return a;
}

PixelSet Region::support() const {
  PixelSet s{grid_, {}};
  s.pixels.reserve(support_count_);
  for (std::size_t k = 0; k < mask_.size(); ++k)
    if (mask_[k]) s.pixels.push_back(k);
  return s;
}

double Region::coverage(std::size_t k) const {
  const Point2 c = grid_.center(k);
  const Point2 half(0.5 * grid_.h, 0.5 * grid_.h);
  const Point2 lo = c - half, hi = c + half;
  double a = 0.0;
  for (const auto& r : rings_) {
    const Ring clipped = clip_to_box(r, lo, hi);
    if (clipped.size() >= 3) a += signed_area(clipped);
  }
  return std::clamp(a / grid_.cell_area(), 0.0, 1.0);
}

std::vector<Ring> square_shape(const Point2& lo, const Point2& hi) {
  return {{lo, {hi.x(), lo.y()}, hi, {lo.x(), hi.y()}}};
}

namespace {
Ring circle_ring(const Point2& c, double r, int segments) {
  Ring ring;
  ring.reserve(segments);
  for (int k = 0; k < segments; ++k) {
    const double t = 2.0 * std::numbers::pi * (k + 0.5) / segments;
    ring.emplace_back(c.x() + r * std::cos(t), c.y() + r * std::sin(t));
  }
  return ring;
}
}  // namespace

std::vector<Ring> disk_shape(const Point2& center, double radius, int segments) {
  return {circle_ring(center, radius, segments)};
}

std::vector<Ring> annulus_shape(const Point2& center, double r_in, double r_out, int segments) {
  if (!(0.0 < r_in && r_in < r_out)) throw Error(ErrorCode::InvalidArgument, "annulus needs 0 < r_in < r_out");
  Ring inner = circle_ring(center, r_in, segments);
  std::reverse(inner.begin(), inner.end());
  return {circle_ring(center, r_out, segments), inner};
}

std::vector<Ring> split_pair_shape(double gap) {
  if (!(gap > 0.0)) throw Error(ErrorCode::InvalidArgument, "split_pair gap must be positive");
  const double g = 0.5 * gap;
  return {square_shape({-g - 1.0, -0.5}, {-g, 0.5})[0], square_shape({g, -0.5}, {g + 1.0, 0.5})[0]};
}

std::vector<Ring> l_shape() {
  return {{{-1, -1}, {1, -1}, {1, 0}, {0, 0}, {0, 1}, {-1, 1}}};
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<double> parse_numbers(const std::string& args) {
  std::vector<double> out;
  std::string cleaned = args;
  for (char& ch : cleaned)
    if (ch == ',') ch = ' ';
  std::istringstream is(cleaned);
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Config, "bad number '" + tok + "' in region literal");
    }
  }
  return out;
}

Ring parse_vertex_list(const std::string& args) {
  Ring ring;
  std::istringstream is(args);
  std::string item;
  while (std::getline(is, item, ',')) {
    const auto nums = parse_numbers(item);
    if (nums.size() != 2) throw Error(ErrorCode::Config, "polygon vertex needs two coordinates: '" + trim(item) + "'");
    ring.emplace_back(nums[0], nums[1]);
  }
  if (ring.size() < 3) throw Error(ErrorCode::Config, "polygon needs at least three vertices");
  return ring;
}

}  // namespace

std::vector<Ring> parse_region_spec(std::string_view spec_in) {
  const std::string spec = trim(spec_in);
  std::vector<std::pair<std::string, std::string>> calls;
  std::size_t pos = 0;
  while (pos < spec.size()) {
    while (pos < spec.size() && std::isspace(static_cast<unsigned char>(spec[pos]))) ++pos;
    if (pos >= spec.size()) break;
    std::size_t name_end = pos;
    while (name_end < spec.size() && (std::isalnum(static_cast<unsigned char>(spec[name_end])) || spec[name_end] == '_')) ++name_end;
    if (name_end == pos) throw Error(ErrorCode::Config, "cannot parse region literal '" + spec + "'");
    std::string name = spec.substr(pos, name_end - pos);
    std::string args;
    pos = name_end;
    if (pos < spec.size() && spec[pos] == '(') {
      const std::size_t close = spec.find(')', pos);
      if (close == std::string::npos) throw Error(ErrorCode::Config, "unbalanced parenthesis in '" + spec + "'");
      args = spec.substr(pos + 1, close - pos - 1);
      pos = close + 1;
    }
    calls.emplace_back(std::move(name), std::move(args));
  }
  if (calls.empty()) throw Error(ErrorCode::Config, "empty region literal");

  std::vector<Ring> rings;
  for (const auto& [name, args] : calls) {
    if (name == "polygon" || name == "hole") {
      rings.push_back(parse_vertex_list(args));
      continue;
    }
    if (calls.size() != 1) throw Error(ErrorCode::Config, "preset '" + name + "' cannot be combined");
    const auto a = parse_numbers(args);
    if (name == "square") {
      if (a.empty()) return square_shape({-1, -1}, {1, 1});
      if (a.size() == 4) return square_shape({a[0], a[1]}, {a[2], a[3]});
    } else if (name == "disk") {
      if (a.size() == 1) return disk_shape({0, 0}, a[0]);
      if (a.size() == 3) return disk_shape({a[0], a[1]}, a[2]);
    } else if (name == "annulus") {
      if (a.size() == 2) return annulus_shape({0, 0}, a[0], a[1]);
    } else if (name == "split_pair") {
      if (a.empty()) return split_pair_shape(2.0);
      if (a.size() == 1) return split_pair_shape(a[0]);
    } else if (name == "L_shape") {
      if (a.empty()) return l_shape();
    } else {
      throw Error(ErrorCode::Config, "unknown region preset '" + name + "'");
    }
    throw Error(ErrorCode::Config, "wrong number of arguments for preset '" + name + "'");
  }
  return rings;
}

std::vector<int> label_components(const Grid& grid, const std::vector<std::uint8_t>& mask,
                                  bool eight_connected, int* count) {
  std::vector<int> label(grid.size(), -1);
  int next = 0;
  std::queue<std::size_t> queue;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || label[start] >= 0) continue;
    label[start] = next;
    queue.push(start);
    while (!queue.empty()) {
      const std::size_t k = queue.front();
      queue.pop();
      const int i = grid.col(k), j = grid.row(k);
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          if (!eight_connected && di != 0 && dj != 0) continue;
          const int ni = i + di, nj = j + dj;
          if (ni < 0 || nj < 0 || ni >= grid.nx || nj >= grid.ny) continue;
          const std::size_t nk = grid.index(ni, nj);
          if (mask[nk] && label[nk] < 0) {
            label[nk] = next;
            queue.push(nk);
          }
        }
      }
    }
    ++next;
  }
  if (count) *count = next;
  return label;
}

}  // namespace otlab
