#include "otlab/report.hpp"

#include "otlab/region.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace otlab {
namespace {

constexpr double kMonotonicityTol = 1e-12;
constexpr double kLoeperAffineTol = 1e-12;
constexpr double kLoeperTol = 1e-8;
constexpr double kPropagationFactor = 5.0;  // gap <= 5 h max|D²c|
constexpr double kHoleFillCells = 3.0;      // Hausdorff <= 3 h
constexpr double kStabilityFactor = 1.5;    // ratios <= 1.5 C, C fit on the coarsest section
constexpr double kSectionConvexityTol = 2e-2;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// value <= bound, with the slack bound - value in the detail.
Verdict at_most(std::string name, std::string what, double value, double bound) {
  const bool ok = value <= bound;
  return {std::move(name), ok,
          what + " = " + num(value) + (ok ? " <= " : " > ") + num(bound) + " (slack " + num(bound - value) + ")"};
}

Verdict exactly(std::string name, std::string what, std::size_t value, std::size_t expected) {
  const bool ok = value == expected;
  return {std::move(name), ok,
          what + " = " + std::to_string(value) + (ok ? " == " : " != ") + std::to_string(expected) +
              " (slack " + std::to_string(static_cast<long long>(expected) - static_cast<long long>(value)) + ")"};
}

SourceDensity make_source(const Scenario& s, int resolution) {
  Region src = Region::with_resolution(parse_region_spec(s.source_region), resolution);
  return s.checkerboard ? SourceDensity::checkerboard(std::move(src), s.contrast, s.checker_block)
                        : SourceDensity::uniform(std::move(src));
}

DiscreteTarget make_target(const Scenario& s) {
  Region tgt = Region::with_resolution(parse_region_spec(s.target_region), s.resolution);
  DiscreteTarget nu;
  switch (s.points_kind) {
    case Scenario::Points::stratified:
      nu = DiscreteTarget::stratified(std::move(tgt), s.point_count, s.seed);
      break;
    case Scenario::Points::polar:
      nu = DiscreteTarget::polar(std::move(tgt), {0, 0}, s.polar_r_in, s.polar_r_out, s.polar_rings, s.polar_per_ring);
      break;
    case Scenario::Points::explicit_list:
      nu = DiscreteTarget::from_points(std::move(tgt), s.points, s.weights);
      break;
  }
  nu.validate();
  return nu;
}

std::size_t isolated_count(const IsolationReport& rep) { return rep.isolated_count(); }

// Representative of the first isolated component, else of the first
// component, else the support pixel nearest the centroid of the support.
Point2 default_section_base(const RunReport& r) {
  if (r.isolation)
    for (const auto& c : r.isolation->components)
      if (c.is_isolated) return c.representative;
  if (r.singular && !r.singular->components.empty())
    return r.singular->grid.center(r.singular->components.front().representative);
  const Grid& g = r.mu->grid();
  const auto support = r.mu->region.support().pixels;
  Point2 mean = Point2::Zero();
  for (std::size_t k : support) mean += g.center(k);
  mean /= static_cast<double>(support.size());
  std::size_t best = support.front();
  for (std::size_t k : support)
    if ((g.center(k) - mean).norm() < (g.center(best) - mean).norm()) best = k;
  return g.center(best);
}

void run_isolation(RunReport& r) {
  const Scenario& s = r.scenario;
  const SourceDensity& mu = *r.mu;
  r.isolation = isolation_report(*r.singular, *r.phi, mu);
  const auto& iso = *r.isolation;
  const std::size_t isolated = isolated_count(iso);
  std::string summary = std::to_string(isolated) + " isolated of " + std::to_string(iso.components.size()) +
                        " components, " + std::to_string(iso.hole_count) + " holes: ";
  summary += iso.violation() ? "VIOLATION (isolated 2-d component without a hole)" : "CONSISTENT";
  r.verdicts.push_back({"isolation.hole_consistency", !iso.violation(), summary});

  r.refinements.push_back({s.resolution, r.singular->pixels.size(), r.singular->components.size(), isolated});
  for (int res : s.isolation_resolutions) {
    if (res == s.resolution) continue;
    const SourceDensity fine = make_source(s, res);
    const auto sol = solve_dual(r.phi->cost(), fine, *r.nu, {s.tol, s.max_iter});
    if (!sol.converged)
      r.verdicts.push_back(at_most("isolation.refinement_solver", "residual at " + std::to_string(res), sol.residual,
                                   s.tol));
    const auto set = singular_set(sol.potential, fine);
    const auto rep = isolation_report(set, sol.potential, fine);
    r.refinements.push_back({res, set.pixels.size(), set.components.size(), isolated_count(rep)});
  }
  if (s.expect_isolated)
    for (const auto& run : r.refinements)
      r.verdicts.push_back(exactly("isolation.count@" + std::to_string(run.resolution), "isolated components",
                                   run.isolated, *s.expect_isolated));
}

void run_holes(RunReport& r) {
  const Scenario& s = r.scenario;
  try {
    r.holes = detect_holes(r.nu->parent_region);
  } catch (const Error& e) {
    r.verdicts.push_back({"holes.detect", false, e.what()});
    return;
  }
  if (s.expect_holes) r.verdicts.push_back(exactly("holes.count", "holes", r.holes->count(), *s.expect_holes));
  if (!r.isolation || r.holes->count() == 0) return;

  const CostFunction& cost = r.phi->cost();
  const double h = r.mu->grid().h;
  std::vector<Point2> queries;
  for (const auto& c : r.isolation->components) {
    if (!c.is_isolated || c.affine_dim != 2) continue;
    queries.push_back(c.representative);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.holes->count(); ++i) {
      const double d = hole_fill_distance(cost, c.polytope, r.holes->holes[i], r.nu->parent_region.h());
      r.hole_fill.push_back({c.component, i, d});
      best = std::min(best, d);
    }
    r.verdicts.push_back(at_most("holes.fill@" + std::to_string(c.component),
                                 "Hausdorff(c-Exp(∂ subdifferential), ∂hole)", best, kHoleFillCells * h));
  }
  if (queries.empty()) return;
  annotate_hole_convexity(*r.holes, cost, queries);
  for (std::size_t i = 0; i < r.holes->count(); ++i) {
    bool any = false;
    for (const auto& q : r.holes->holes[i].c_convex_wrt) any = any || q.c_convex;
    r.verdicts.push_back({"holes.c_convex@" + std::to_string(i), any,
                          any ? "hole is c-convex with respect to an isolated singular point"
                              : "hole is not c-convex with respect to any isolated singular point"});
  }
}

void run_propagation(RunReport& r) {
  const Scenario& s = r.scenario;
  std::size_t holes = 0;
  if (r.holes) {
    holes = r.holes->count();
  } else {
    try {
      holes = detect_holes(r.nu->parent_region).count();
    } catch (const Error&) {
      holes = 0;
    }
  }
  if (holes > 0) {
    r.verdicts.push_back({"propagation", true, "not applicable: the target has " + std::to_string(holes) + " holes"});
    return;
  }
  const double bound = kPropagationFactor * r.mu->grid().h * max_source_hessian(*r.phi, *r.mu);
  const auto iso = r.isolation ? *r.isolation : isolation_report(*r.singular, *r.phi, *r.mu);
  double worst = 0.0;
  for (const auto& c : iso.components) {
    if (c.is_isolated) continue;
    try {
      const double gap = propagation_check(*r.phi, *r.mu, c.representative, s.propagation_radius);
      r.propagation.push_back({c.component, c.representative, gap});
      worst = std::max(worst, gap);
    } catch (const Error& e) {
      r.verdicts.push_back({"propagation@" + std::to_string(c.component), false, e.what()});
    }
  }
  r.verdicts.push_back(at_most("propagation", "max subdifferential-to-nearby-gradient gap", worst, bound));
}

void run_sections(RunReport& r) {
  const Scenario& s = r.scenario;
  const DualPotential& phi = *r.phi;
  const Point2 base = s.section_base ? *s.section_base : default_section_base(r);
  CoVec2 p;
  if (s.section_p) {
    p = *s.section_p;
  } else {
    const auto sub = subdifferential_on_square(phi, base, r.mu->grid().h);
    p = CoVec2::Zero();
    for (const CoVec2& v : sub.vertices) p += v;
    p /= static_cast<double>(sub.vertices.size());
  }
  Point2 focus;
  try {
    focus = c_exp(phi.cost(), base, p);
  } catch (const Error& e) {
    r.verdicts.push_back({"sections.focus", false, e.what()});
    return;
  }
  for (double height : s.section_heights) {
    try {
      r.sections.push_back(build_section(phi, *r.mu, focus, base, height));
    } catch (const Error& e) {
      r.verdicts.push_back({"sections.build@" + num(height), false, e.what()});
    }
  }
  // Nesting in h, checked on the sorted family.
  std::vector<const Section*> sorted;
  for (const auto& sec : r.sections) sorted.push_back(&sec);
  std::sort(sorted.begin(), sorted.end(), [](auto a, auto b) { return a->height < b->height; });
  std::size_t missing = 0;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const auto& a = sorted[i - 1]->pixels.pixels;
    const auto& b = sorted[i]->pixels.pixels;
    std::vector<std::size_t> diff;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(diff));
    missing += diff.size();
  }
  r.verdicts.push_back(at_most("sections.nested", "pixels of a smaller section outside a larger one",
                               static_cast<double>(missing), 0.0));
  double excess = 0.0;
  for (const auto& sec : r.sections) excess = std::max(excess, sec.convexity.excess);
  r.verdicts.push_back(
      at_most("sections.c_convex", "max relative hull-vs-image area excess", excess, kSectionConvexityTol));
}

void run_aleksandrov(RunReport& r) {
  if (r.sections.empty()) return;
  const auto& first = r.sections.front();
  try {
    r.aleksandrov = aleksandrov_check(*r.phi, *r.mu, r.sections, Witness{first.p0, 0.0});
  } catch (const Error& e) {
    r.verdicts.push_back({"aleksandrov", false, e.what()});
    return;
  }
  // C is fit on the coarsest (largest h) section with gap > 0.
  std::size_t coarse = r.sections.size();
  for (std::size_t i = 0; i < r.sections.size(); ++i)
    if (r.sections[i].gap > 0 && (coarse == r.sections.size() || r.sections[i].height > r.sections[coarse].height))
      coarse = i;
  if (coarse == r.sections.size()) {
    r.verdicts.push_back({"aleksandrov.stability", true, "all sections have gap 0: every ratio is 0"});
    return;
  }
  const double c = r.aleksandrov->ratios[coarse];
  double worst = 0.0;
  for (double ratio : r.aleksandrov->ratios) worst = std::max(worst, ratio);
  r.verdicts.push_back(at_most("aleksandrov.stability", "max ratio / ratio at h = " + num(r.sections[coarse].height),
                               worst / c, kStabilityFactor));
}

void run_cones(RunReport& r) {
  const Scenario& s = r.scenario;
  const Region& spt = r.nu->parent_region;
  std::size_t skipped = 0;
  for (const auto& sec : r.sections) {
    if (sec.gap <= 0) continue;
    try {
      auto cone = build_c_cone(*r.phi, *r.mu, sec);
      auto inc = check_cone(*r.phi, *r.mu, cone);
      const bool interior = spt.contains(sec.focus);
      r.cones.push_back({std::move(cone), inc, false, interior});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BoundaryTouching) throw;
      ++skipped;  // the lemma needs S to stay away from the boundary
    }
  }
  if (s.cone_random > 0 && !s.section_heights.empty()) {
    const auto [lo, hi] = std::minmax_element(s.section_heights.begin(), s.section_heights.end());
    for (auto& cone : random_cones(*r.phi, *r.mu, s.cone_random, s.seed, *lo, *hi)) {
      auto inc = check_cone(*r.phi, *r.mu, cone);
      const bool interior = spt.contains(cone.section.focus);
      r.cones.push_back({std::move(cone), inc, true, interior});
    }
  }
  std::size_t failures = 0, checked = 0;
  double margin = std::numeric_limits<double>::infinity();
  std::size_t interior = 0;
  for (const auto& c : r.cones) {
    failures += c.inclusion.failures;
    checked += c.inclusion.checked;
    if (c.focus_interior && c.cone.section.gap > 0) {
      ++interior;
      margin = std::min(margin, c.inclusion.margin);
    }
  }
  auto inclusion = at_most("cone.inclusion", "foci of ∂K(x0) without a support in S (of " + std::to_string(checked) +
                                                 " checked, " + std::to_string(r.cones.size()) + " cones)",
                           static_cast<double>(failures), 0.0);
  if (skipped > 0) inclusion.detail += "; " + std::to_string(skipped) + " sections touch the boundary";
  r.verdicts.push_back(inclusion);
  if (interior > 0) {
    const bool ok = margin > 0;
    r.verdicts.push_back({"cone.interior", ok,
                          "min margin of p0 inside ∂K(x0) = " + num(margin) + (ok ? " > 0" : " <= 0") +
                              " over " + std::to_string(interior) + " cones (slack " + num(margin) + ")"});
  }
}

}  // namespace

bool RunReport::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

RunReport run_scenario(const Scenario& s) {
  RunReport r;
  r.scenario = s;
  const CostFunction cost(s.cost);
  r.mu = make_source(s, s.resolution);
  r.nu = make_target(s);

  if (!s.lambda.empty()) {
    r.phi = DualPotential(cost, *r.nu, s.lambda);
    r.masses = integrate_cells(*r.phi, *r.mu, false).masses;
    for (std::size_t j = 0; j < r.masses.size(); ++j)
      r.residual = std::max(r.residual, std::abs(r.masses[j] - r.nu->weights[j]));
  } else {
    try {
      auto sol = solve_dual(cost, *r.mu, *r.nu, {s.tol, s.max_iter});
      r.solved = true;
      r.converged = sol.converged;
      r.residual = sol.residual;
      r.iterations = sol.iterations;
      r.masses = std::move(sol.masses);
      r.phi = std::move(sol.potential);
    } catch (const Error& e) {
      r.verdicts.push_back({"solver", false, e.what()});
      return r;
    }
    auto v = at_most("solver", "max |mass - weight|", r.residual, s.tol);
    if (!r.converged) v.pass = false, v.detail += "; no convergence in " + std::to_string(r.iterations) + " iterations";
    r.verdicts.push_back(v);
  }
  r.tessellation = laguerre_assign(*r.phi, *r.mu, default_gap_tol(*r.phi, *r.mu));

  if (s.runs(Analysis::structural)) {
    r.structural = verify_structural(cost, r.mu->region, r.nu->parent_region, s.structural_samples, s.seed);
    const auto& st = *r.structural;
    r.verdicts.push_back({"structural.twist", st.twist_ok,
                          std::to_string(st.twist_collisions) + " co-gradient collisions (min separation " +
                              num(st.min_cogradient_separation) + ")"});
    r.verdicts.push_back({"structural.nondegeneracy", st.nondeg_ok, "min |det D̄Dc| = " + num(st.min_abs_det)});
    r.verdicts.push_back({"structural.mtw", st.mtw_ok,
                          "min MTW term = " + num(st.min_mtw) + (st.mtw_ok ? " >= " : " < ") + num(-kMtwSlack) +
                              " (slack " + num(st.min_mtw + kMtwSlack) + ")"});
  }
  if (s.runs(Analysis::singular)) {
    r.singular = singular_set(*r.phi, *r.mu);
    if (s.expect_singular) {
      const bool nonempty = !r.singular->empty();
      r.verdicts.push_back({"singular.expected", nonempty == *s.expect_singular,
                            std::to_string(r.singular->pixels.size()) + " singular pixels in " +
                                std::to_string(r.singular->components.size()) + " components, expected " +
                                (*s.expect_singular ? "nonempty" : "empty")});
    }
  }
  if (s.runs(Analysis::isolation)) run_isolation(r);
  if (s.runs(Analysis::holes)) run_holes(r);
  if (s.runs(Analysis::propagation)) run_propagation(r);

  if (s.runs(Analysis::loeper)) {
    const auto dom = admissible_domains(s.cost);
    const Region src = Region::with_resolution(parse_region_spec(s.loeper_source.empty() ? dom.source : s.loeper_source), 256);
    const Region tgt = Region::with_resolution(parse_region_spec(s.loeper_target.empty() ? dom.target : s.loeper_target), 256);
    r.loeper = loeper_sweep(cost, src, tgt, s.loeper_samples, s.seed);
    const bool affine = s.cost == CostId::quadratic || s.cost == CostId::bilinear;
    r.verdicts.push_back(at_most("loeper", "max violation over " + std::to_string(r.loeper->evaluated) + " tuples",
                                 r.loeper->max_violation, affine ? kLoeperAffineTol : kLoeperTol));
  }
  if (s.runs(Analysis::monotonicity)) {
    const auto pairs = sample_transport_pairs(*r.phi, *r.mu, s.monotonicity_pairs, s.seed);
    r.monotonicity_pairs = pairs.size();
    r.monotonicity = c_monotonicity_check(cost, pairs);
    r.verdicts.push_back(at_most("monotonicity", "max c-monotonicity violation over " + std::to_string(pairs.size()) +
                                                     " transport pairs",
                                 *r.monotonicity, kMonotonicityTol));
  }
  if (s.runs(Analysis::sections)) run_sections(r);
  if (s.runs(Analysis::aleksandrov)) run_aleksandrov(r);
  if (s.runs(Analysis::cone)) run_cones(r);
  return r;
}

}  // namespace otlab
