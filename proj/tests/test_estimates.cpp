#include "otlab/estimates.hpp"
#include "otlab/structural.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace otlab {
namespace {

const CostFunction kQuad(CostId::quadratic);

Region square(int n) { return Region::with_resolution(square_shape({-1, -1}, {1, 1}), n); }

struct Solved {
  SourceDensity mu;
  DualPotential phi;
};

Solved two_point(int n = 128) {
  const auto mu = SourceDensity::uniform(square(n));
  const auto nu = DiscreteTarget::from_points(Region::with_resolution(square_shape({-2, -2}, {2, 2}), 16),
                                              {{-1, 0}, {1, 0}});
  auto r = solve_dual(kQuad, mu, nu, {1e-12, 50});
  return {mu, r.potential};
}

// u = max of three c-affine pieces with foci on a circle of radius 1/2 and
// equal offsets: the apex is the origin and, with focus 0, the section S_h is
// the equilateral triangle {max <x, y_j> <= h} of inradius 2h.
Solved pyramid(int n = 256) {
  std::vector<Point2> y;
  for (int i = 0; i < 3; ++i) {
    const double a = 2 * std::numbers::pi * i / 3 + 0.3;
    y.emplace_back(0.5 * std::cos(a), 0.5 * std::sin(a));
  }
  return {SourceDensity::uniform(square(n)), DualPotential(kQuad, DiscreteTarget::from_points(square(64), y), {0, 0, 0})};
}

// gap^2 ell / (d vol^2) for that triangle: gap = h, ell = width = 6h,
// d = inradius = 2h, vol = 12 sqrt(3) h^2.
double pyramid_ratio(double h) { return h * h * 6 * h / (2 * h * std::pow(12 * std::sqrt(3.0) * h * h, 2)); }

TEST(LoeperTest, AffineCasesAreExact) {
  std::mt19937_64 rng(21);
  for (auto id : {CostId::quadratic, CostId::bilinear}) {
    const CostFunction c(id);
    double worst = 0.0;
    for (int s = 0; s < 10000; ++s) {
      const Point2 x0(uniform01(rng), uniform01(rng)), x(uniform01(rng), uniform01(rng));
      const Point2 y0(uniform01(rng), uniform01(rng)), y1(uniform01(rng), uniform01(rng));
      worst = std::max(worst, loeper_check(c, x0, -c.grad_x(x0, y0), -c.grad_x(x0, y1), x));
    }
    EXPECT_LE(worst, 1e-12) << to_string(id);
  }
}

TEST(LoeperTest, MtwCostsOnPresetDomains) {
  std::mt19937_64 rng(22);
  for (auto id : {CostId::log, CostId::sqrt_plus}) {
    const CostFunction c(id);
    const Point2 off = id == CostId::log ? Point2(2, 2) : Point2(0, 0);
    double worst = 0.0;
    for (int s = 0; s < 10000; ++s) {
      const Point2 x0(uniform01(rng), uniform01(rng)), x(uniform01(rng), uniform01(rng));
      const Point2 y0 = off + Point2(uniform01(rng), uniform01(rng));
      const Point2 y1 = off + Point2(uniform01(rng), uniform01(rng));
      worst = std::max(worst, loeper_check(c, x0, -c.grad_x(x0, y0), -c.grad_x(x0, y1), x));
    }
    EXPECT_LE(worst, 1e-8) << to_string(id);
  }
}

TEST(LoeperTest, RejectsShortGrid) {
  EXPECT_THROW(loeper_check(kQuad, {0, 0}, {1, 0}, {0, 1}, {1, 1}, 1), Error);
}

TEST(MonotonicityTest, OptimalPairs) {
  const auto s = two_point();
  const auto pairs = sample_transport_pairs(s.phi, s.mu, 1000, 3);
  EXPECT_EQ(pairs.size(), 1000u);
  EXPECT_LE(c_monotonicity_check(kQuad, pairs), 1e-12);
  EXPECT_EQ(sample_transport_pairs(s.phi, s.mu, 50, 3), sample_transport_pairs(s.phi, s.mu, 50, 3));
}

TEST(MonotonicityTest, SwappedAssignment) {
  const Point2 x0(-0.5, 0), x1(0.5, 0), left(-1, 0), right(1, 0);
  const std::vector<TransportPair> swapped = {{x0, right}, {x1, left}};
  const double direct = (kQuad.eval(x0, right) - kQuad.eval(x0, left)) + (kQuad.eval(x1, left) - kQuad.eval(x1, right));
  EXPECT_DOUBLE_EQ(c_monotonicity_check(kQuad, swapped), direct);
  // With c = |x - x̄|^2 / 2 the sum is <x1 - x0, x̄0 - x̄1>.
  EXPECT_NEAR(direct, (x1 - x0).dot(right - left), 1e-15);
  EXPECT_GT(direct, 0.0);
}

TEST(MonotonicityTest, SingleTargetIsZero) {
  const auto mu = SourceDensity::uniform(square(64));
  const DualPotential phi(kQuad, DiscreteTarget::from_points(square(16), {{0.3, 0.2}}), {0.0});
  EXPECT_EQ(c_monotonicity_check(kQuad, sample_transport_pairs(phi, mu, 300, 1)), 0.0);
}

TEST(SectionTest, LargeHeightCoversSupport) {
  const auto s = two_point(64);
  const auto sec = build_section(s.phi, s.mu, {0, 0}, {0.3, 0.1}, 100.0);
  EXPECT_EQ(sec.pixels.pixels, s.mu.region.support().pixels);
  EXPECT_NEAR(sec.gap, 100.0, 1e-9);
}

TEST(SectionTest, ZeroHeightAtCellFocusIsTheCell) {
  const auto s = two_point(64);
  const Grid& g = s.mu.grid();
  const auto sec = build_section(s.phi, s.mu, {1, 0}, g.center(g.index(48, 20)), 0.0);
  std::vector<std::size_t> cell;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.center(k).x() > 0) cell.push_back(k);
  EXPECT_EQ(sec.pixels.pixels, cell);
  EXPECT_NEAR(sec.gap, 0.0, 1e-12);
}

TEST(SectionTest, MonotoneAndCConvex) {
  const auto p = pyramid(128);
  std::vector<std::size_t> last;
  for (double h : {0.02, 0.05, 0.1, 0.2}) {
    const auto sec = build_section(p.phi, p.mu, {0.05, -0.02}, {0, 0}, h);
    EXPECT_TRUE(std::includes(sec.pixels.pixels.begin(), sec.pixels.pixels.end(), last.begin(), last.end()));
    EXPECT_TRUE(sec.convexity.convex) << h << " excess " << sec.convexity.excess;
    EXPECT_NEAR(sec.volume, sec.pixels.size() * p.mu.grid().cell_area(), 1e-15);
    last = sec.pixels.pixels;
  }
}

TEST(SectionTest, PyramidGeometry) {
  const auto p = pyramid(256);
  const double h = 0.1;
  const auto sec = build_section(p.phi, p.mu, {0, 0}, {0, 0}, h);
  EXPECT_NEAR(sec.volume, 12 * std::sqrt(3.0) * h * h, 0.02 * sec.volume);
  // Minimum width of the triangle is its height 3r = 6h; the pixel-center
  // hull falls short by up to a cell.
  EXPECT_NEAR(sec.planes.width(), 6 * h, 2 * p.mu.grid().h);
  EXPECT_NEAR(sec.ell, sec.planes.width(), 1e-9);
  EXPECT_NEAR(sec.plane_distance(), 2 * h, 2 * p.mu.grid().h);
}

TEST(SectionTest, AnnulusSectionsShrinkToCenter) {
  const auto mu = SourceDensity::uniform(Region::with_resolution(disk_shape({0, 0}, 1.0), 256));
  const Region tgt = Region::with_resolution(annulus_shape({0, 0}, 0.4, 1.0), 256);
  const auto r = solve_dual(kQuad, mu, DiscreteTarget::polar(tgt, {0, 0}, 0.4, 1.0, 9, 24), {1e-10, 100});
  double last = std::numeric_limits<double>::infinity();
  for (double h : {0.1, 0.05, 0.025, 0.01, 0.005, 0.003}) {
    const auto sec = build_section(r.potential, mu, {0, 0}, {0, 0}, h);
    const double d = diameter(sec.hull);
    EXPECT_LE(d, last) << h;
    last = d;
  }
  EXPECT_LE(last, 3 * mu.grid().h);
  // The singular point is a pixel corner: no pixel center lies in S_0.
  try {
    build_section(r.potential, mu, {0, 0}, {0, 0}, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptySection);
  }
}

TEST(ContactTest, BisectorMidpoint) {
  const auto s = two_point(128);
  const Grid& g = s.mu.grid();
  const Point2 x0(0, 0.3);
  const auto set = contact_set(s.phi, s.mu, x0, {0, -0.3});
  // u - m = |x_1|: the two columns next to the bisector.
  EXPECT_EQ(set.size(), 2u * 128u);
  std::size_t on_row = 0;
  for (std::size_t k : set.pixels) {
    EXPECT_LT(std::abs(g.center(k).x()), g.h);
    if (std::abs(g.center(k).y() - x0.y()) < 0.5 * g.h + 1e-12) {
      ++on_row;
      EXPECT_LE((g.center(k) - x0).norm(), g.h);
    }
  }
  EXPECT_LE(on_row, 2u);
}

TEST(ContactTest, ExtremalVertexGivesClosedCell) {
  const auto s = two_point(128);
  const Grid& g = s.mu.grid();
  const auto set = contact_set(s.phi, s.mu, {0, 0.3}, {1, -0.3});
  std::size_t right = 0;
  for (std::size_t k : set.pixels) {
    EXPECT_GT(g.center(k).x(), -g.h);
    right += g.center(k).x() > 0;
  }
  EXPECT_EQ(right, 64u * 128u);
}

TEST(ContactTest, SingleTargetIsEverything) {
  const auto mu = SourceDensity::uniform(square(64));
  const DualPotential phi(kQuad, DiscreteTarget::from_points(square(16), {{0.3, 0.2}}), {0.0});
  const Point2 x0(0.1, 0.1);
  EXPECT_EQ(contact_set(phi, mu, x0, phi.piece_gradient(0, x0)).pixels, mu.region.support().pixels);
  EXPECT_THROW(contact_set(phi, mu, x0, {5, 5}), Error);
}

TEST(ConeTest, PyramidConeIsThePotential) {
  const auto p = pyramid(128);
  const auto sec = build_section(p.phi, p.mu, {0, 0}, {0, 0}, 0.1);
  const auto cone = build_c_cone(p.phi, p.mu, sec);
  // Inside the section u itself is the c-cone: every piece passes through the apex.
  for (std::size_t i = 0; i < sec.pixels.size(); i += 17) {
    const Point2 x = p.mu.grid().center(sec.pixels.pixels[i]);
    EXPECT_NEAR(cone.value(kQuad, x), p.phi.value(x), 2 * cone.step * 0.6);
  }
  // ∂K(x0) is the triangle of the three co-gradients, up to the grid step.
  std::vector<CoVec2> tri;
  for (std::size_t j = 0; j < 3; ++j) tri.push_back(p.phi.piece_gradient(j, {0, 0}));
  const auto sub = convex_hull(cone.subdifferential());
  EXPECT_NEAR(polygon_area(sub), polygon_area(convex_hull(tri)), 4 * cone.step * 1.6);
  const auto inc = check_cone(p.phi, p.mu, cone);
  EXPECT_GT(inc.checked, 100u);
  EXPECT_EQ(inc.failures, 0u);
  EXPECT_GT(inc.margin, 0.0);
  EXPECT_GE(inc.margin, inc.predicted_margin - 2 * cone.step);
}

TEST(ConeTest, TwoPointWindow) {
  const auto s = two_point(128);
  const Point2 x0(0, 0.3);
  auto sec = build_section(s.phi, s.mu, {0, 0}, x0, 0.05);
  EXPECT_THROW(build_c_cone(s.phi, s.mu, sec), Error);
  // Restrict S to a small square around x0 (the strip itself reaches ∂Ω).
  std::vector<std::size_t> window;
  for (std::size_t k : sec.pixels.pixels)
    if ((s.mu.grid().center(k) - x0).cwiseAbs().maxCoeff() < 0.2) window.push_back(k);
  sec.pixels.pixels = window;
  const auto cone = build_c_cone(s.phi, s.mu, sec);
  const auto sub = convex_hull(cone.subdifferential());
  // Each vertex's piece reaches m0 + h on the strip edge: the vertices lie on
  // the boundary of ∂K(x0), up to the co-grid step.
  for (const CoVec2 v : {CoVec2(-1, -0.3), CoVec2(1, -0.3)})
    EXPECT_TRUE(convex_contains(sub, v, 2 * cone.step)) << v.transpose();
  // A window is not a section: ∂u(S) is the segment between the vertices
  // while ∂K(x0) has interior, so the inclusion check must reject it.
  const auto inc = check_cone(s.phi, s.mu, cone);
  EXPECT_GT(inc.checked, 0u);
  EXPECT_GT(inc.failures, inc.checked / 2);
}

TEST(AleksandrovTest, SingleTargetGivesZero) {
  const auto mu = SourceDensity::uniform(square(64));
  const DualPotential phi(kQuad, DiscreteTarget::from_points(square(16), {{0.3, 0.2}}), {0.0});
  const auto sec = build_section(phi, mu, {0.3, 0.2}, {0.1, 0.1}, 0.0);
  const auto r = aleksandrov_check(phi, mu, {sec}, std::nullopt);
  EXPECT_EQ(r.ratios, std::vector<double>{0.0});
}

TEST(AleksandrovTest, PyramidMatchesAnalyticRatios) {
  const auto p = pyramid(256);
  std::vector<Section> secs;
  for (double h : {0.1, 0.05, 0.025}) secs.push_back(build_section(p.phi, p.mu, {0, 0}, {0, 0}, h));
  const auto r = aleksandrov_check(p.phi, p.mu, secs, std::nullopt);
  ASSERT_EQ(r.ratios.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_NEAR(r.ratios[i], pyramid_ratio(secs[i].height), 0.08 * pyramid_ratio(secs[i].height));
}

TEST(AleksandrovTest, DegenerateAndWitness) {
  const auto p = pyramid(256);
  const auto tiny = build_section(p.phi, p.mu, {0, 0}, {0, 0}, 0.004);
  try {
    aleksandrov_check(p.phi, p.mu, {tiny}, std::nullopt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateSection);
  }
  // The witness is checked against the parent region of the target, [-1,1]^2.
  const auto sec = build_section(p.phi, p.mu, {0, 0}, {0, 0}, 0.1);
  const auto r = aleksandrov_check(p.phi, p.mu, {sec}, Witness{{0, 0}, 0.01});
  EXPECT_TRUE(r.witness_valid);
  EXPECT_NEAR(r.witness_distance, 1.0, 1e-12);
  const auto far = aleksandrov_check(p.phi, p.mu, {sec}, Witness{{0, 0}, 2.0});
  EXPECT_FALSE(far.witness_valid);
}

}  // namespace
}  // namespace otlab
