#include "otlab/scenario.hpp"

#include "otlab/region.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace otlab {
namespace {

constexpr std::pair<Analysis, const char*> kAnalysisNames[] = {
    {Analysis::structural, "structural"},     {Analysis::holes, "holes"},
    {Analysis::singular, "singular"},         {Analysis::isolation, "isolation"},
    {Analysis::propagation, "propagation"},   {Analysis::loeper, "loeper"},
    {Analysis::monotonicity, "monotonicity"}, {Analysis::sections, "sections"},
    {Analysis::aleksandrov, "aleksandrov"},   {Analysis::cone, "cone"},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

long long to_int(const std::string& s) {
  long long v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
  return v;
}

std::vector<double> to_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& part : split(s, ',')) out.push_back(to_double(part));
  return out;
}

Point2 to_point(const std::string& s) {
  std::istringstream in(s);
  std::string a, b, extra;
  if (!(in >> a >> b) || (in >> extra)) throw std::invalid_argument("expected 'x y', got '" + s + "'");
  return {to_double(a), to_double(b)};
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw std::invalid_argument("expected a boolean, got '" + s + "'");
}

void check_region(const std::string& spec) { parse_region_spec(spec); }

}  // namespace

std::string to_string(Analysis a) {
  for (const auto& [id, name] : kAnalysisNames)
    if (id == a) return name;
  return "?";
}

bool Scenario::runs(Analysis a) const { return std::find(analyses.begin(), analyses.end(), a) != analyses.end(); }

Scenario parse_scenario(std::string_view text, std::string_view origin) {
  Scenario s;
  std::map<std::string, std::function<void(const std::string&)>> setters;
  auto positive = [](long long v, const char* what) {
    if (v <= 0) throw std::invalid_argument(std::string(what) + " must be positive");
    return v;
  };
  setters["name"] = [&](const std::string& v) { s.name = v; };
  setters["cost"] = [&](const std::string& v) { s.cost = parse_cost_id(v); };
  setters["seed"] = [&](const std::string& v) { s.seed = static_cast<std::uint64_t>(to_int(v)); };
  setters["mesh.resolution"] = [&](const std::string& v) { s.resolution = static_cast<int>(to_int(v)); };
  setters["source.region"] = [&](const std::string& v) { check_region(v), s.source_region = v; };
  setters["source.density"] = [&](const std::string& v) {
    if (v == "uniform") {
      s.checkerboard = false;
    } else if (v == "checkerboard") {
      s.checkerboard = true;
    } else {
      throw std::invalid_argument("source.density must be uniform or checkerboard");
    }
  };
  setters["source.contrast"] = [&](const std::string& v) { s.contrast = to_double(v); };
  setters["source.block"] = [&](const std::string& v) {
    s.checker_block = static_cast<int>(positive(to_int(v), "source.block"));
  };
  setters["target.region"] = [&](const std::string& v) { check_region(v), s.target_region = v; };
  setters["target.points"] = [&](const std::string& v) {
    if (v.rfind("polar(", 0) == 0 && v.back() == ')') {
      const auto a = split(std::string_view(v).substr(6, v.size() - 7), ',');
      if (a.size() != 2) throw std::invalid_argument("polar(rings, per_ring)");
      s.points_kind = Scenario::Points::polar;
      s.polar_rings = static_cast<int>(positive(to_int(a[0]), "rings"));
      s.polar_per_ring = static_cast<int>(positive(to_int(a[1]), "per_ring"));
    } else if (v.find(' ') == std::string::npos && v.find(',') == std::string::npos) {
      s.points_kind = Scenario::Points::stratified;
      s.point_count = static_cast<std::size_t>(positive(to_int(v), "target.points"));
    } else {
      s.points_kind = Scenario::Points::explicit_list;
      s.points.clear();
      for (const auto& p : split(v, ',')) s.points.push_back(to_point(p));
    }
  };
  setters["target.weights"] = [&](const std::string& v) { s.weights = to_doubles(v); };
  setters["potential.lambda"] = [&](const std::string& v) { s.lambda = to_doubles(v); };
  setters["solver.tol"] = [&](const std::string& v) { s.tol = to_double(v); };
  setters["solver.max_iter"] = [&](const std::string& v) {
    s.max_iter = static_cast<int>(positive(to_int(v), "solver.max_iter"));
  };
  setters["analyses"] = [&](const std::string& v) {
    s.analyses.clear();
    for (const auto& name : split(v, ',')) {
      const auto it = std::find_if(std::begin(kAnalysisNames), std::end(kAnalysisNames),
                                   [&](const auto& e) { return name == e.second; });
      if (it == std::end(kAnalysisNames)) throw std::invalid_argument("unknown analysis '" + name + "'");
      if (!s.runs(it->first)) s.analyses.push_back(it->first);
    }
  };
  setters["structural.samples"] = [&](const std::string& v) {
    s.structural_samples = static_cast<std::size_t>(positive(to_int(v), "structural.samples"));
  };
  setters["isolation.resolutions"] = [&](const std::string& v) {
    s.isolation_resolutions.clear();
    for (const auto& r : split(v, ',')) s.isolation_resolutions.push_back(static_cast<int>(to_int(r)));
  };
  setters["propagation.radius"] = [&](const std::string& v) { s.propagation_radius = to_double(v); };
  setters["loeper.source"] = [&](const std::string& v) { check_region(v), s.loeper_source = v; };
  setters["loeper.target"] = [&](const std::string& v) { check_region(v), s.loeper_target = v; };
  setters["loeper.samples"] = [&](const std::string& v) {
    s.loeper_samples = static_cast<std::size_t>(positive(to_int(v), "loeper.samples"));
  };
  setters["monotonicity.pairs"] = [&](const std::string& v) {
    s.monotonicity_pairs = static_cast<std::size_t>(positive(to_int(v), "monotonicity.pairs"));
  };
  setters["sections.base"] = [&](const std::string& v) { s.section_base = to_point(v); };
  setters["sections.p"] = [&](const std::string& v) { s.section_p = to_point(v); };
  setters["sections.heights"] = [&](const std::string& v) { s.section_heights = to_doubles(v); };
  setters["cone.random"] = [&](const std::string& v) { s.cone_random = static_cast<std::size_t>(to_int(v)); };
  setters["expect.holes"] = [&](const std::string& v) { s.expect_holes = static_cast<std::size_t>(to_int(v)); };
  setters["expect.isolated"] = [&](const std::string& v) {
    s.expect_isolated = static_cast<std::size_t>(to_int(v));
  };
  setters["expect.singular"] = [&](const std::string& v) {
    if (v == "empty") {
      s.expect_singular = false;
    } else if (v == "nonempty") {
      s.expect_singular = true;
    } else {
      s.expect_singular = to_bool(v);
    }
  };

  auto fail = [&](int line, const std::string& msg) -> Error {
    return Error(ErrorCode::Config, std::string(origin) + ":" + std::to_string(line) + ": " + msg);
  };

  std::set<std::string> seen;
  std::map<std::string, int> line_of;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view raw = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw fail(line_no, "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    const auto it = setters.find(key);
    if (it == setters.end()) throw fail(line_no, "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw fail(line_no, "repeated key '" + key + "'");
    if (value.empty()) throw fail(line_no, "empty value for '" + key + "'");
    try {
      it->second(value);
    } catch (const Error& e) {
      throw fail(line_no, e.what());
    } catch (const std::invalid_argument& e) {
      throw fail(line_no, e.what());
    }
    line_of[key] = line_no;
    s.entries.emplace_back(key, value);
  }

  auto line = [&](const char* key) { return line_of.count(key) ? line_of[key] : 0; };
  if (s.resolution < 64) throw fail(line("mesh.resolution"), "mesh.resolution must be at least 64");
  if (s.contrast < 1.0) throw fail(line("source.contrast"), "source.contrast (Λ) must be at least 1");
  if (s.checkerboard && !line_of.count("source.contrast"))
    throw fail(line("source.density"), "checkerboard density needs source.contrast");
  if (!(s.tol > 0)) throw fail(line("solver.tol"), "solver.tol must be positive");
  if (!s.weights.empty() && s.points_kind != Scenario::Points::explicit_list)
    throw fail(line("target.weights"), "target.weights needs an explicit point list");
  if (!s.weights.empty() && s.weights.size() != s.points.size())
    throw fail(line("target.weights"), "target.weights and target.points differ in length");
  if (!s.lambda.empty() && (s.points_kind != Scenario::Points::explicit_list || s.lambda.size() != s.points.size()))
    throw fail(line("potential.lambda"), "potential.lambda needs one value per explicit target point");
  if (s.points_kind == Scenario::Points::polar) {
    const std::string& t = s.target_region;
    if (t.rfind("annulus(", 0) != 0 || t.back() != ')')
      throw fail(line("target.points"), "polar points need target.region = annulus(r_in, r_out)");
    const auto r = to_doubles(t.substr(8, t.size() - 9));
    s.polar_r_in = r.at(0);
    s.polar_r_out = r.at(1);
  }
  for (double h : s.section_heights)
    if (!(h >= 0)) throw fail(line("sections.heights"), "section heights must be nonnegative");
  for (int r : s.isolation_resolutions)
    if (r < 64) throw fail(line("isolation.resolutions"), "resolutions must be at least 64");
  auto requires_analysis = [&](Analysis a, Analysis needed) {
    if (s.runs(a) && !s.runs(needed))
      throw fail(line("analyses"), "analysis '" + to_string(a) + "' requires '" + to_string(needed) + "'");
  };
  requires_analysis(Analysis::isolation, Analysis::singular);
  requires_analysis(Analysis::propagation, Analysis::singular);
  requires_analysis(Analysis::aleksandrov, Analysis::sections);
  requires_analysis(Analysis::cone, Analysis::sections);
  if (s.expect_holes && !s.runs(Analysis::holes)) throw fail(line("expect.holes"), "expect.holes requires 'holes'");
  if (s.expect_isolated && !s.runs(Analysis::isolation))
    throw fail(line("expect.isolated"), "expect.isolated requires 'isolation'");
  if (s.expect_singular && !s.runs(Analysis::singular))
    throw fail(line("expect.singular"), "expect.singular requires 'singular'");
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

CostDomains admissible_domains(CostId id) {
  // log needs separated sets (its chart is x̄ away from x).
  if (id == CostId::log) return {"square(0,0,1,1)", "square(2,2,3,3)"};
  return {"square(0,0,1,1)", "square(0,0,1,1)"};
}

}  // namespace otlab
