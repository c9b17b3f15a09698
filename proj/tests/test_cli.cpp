#include "otlab/report.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace otlab {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("otlab_cli_" + name);
  fs::remove_all(p);
  return p;
}

int config_line(const std::string& text) {
  try {
    parse_scenario(text, "t.cfg");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Config);
    std::smatch m;
    const std::string what = e.what();
    if (std::regex_search(what, m, std::regex("t\\.cfg:(\\d+):"))) return std::stoi(m[1]);
    return 0;
  }
  return -1;
}

const char* kTwoPoint = R"(# two equal masses
name = two_point
cost = "quadratic"
mesh.resolution = 64
source.region = square
target.region = square(-2,-2,2,2)
target.points = -1 0, 1 0
solver.tol = 1e-12
analyses = singular, isolation, propagation, monotonicity
monotonicity.pairs = 500
expect.isolated = 0
)";

TEST(ScenarioTest, ParsesKeysAndEcho) {
  const auto s = parse_scenario(kTwoPoint);
  EXPECT_EQ(s.name, "two_point");
  EXPECT_EQ(s.cost, CostId::quadratic);
  EXPECT_EQ(s.resolution, 64);
  ASSERT_EQ(s.points.size(), 2u);
  EXPECT_EQ(s.points[1], Point2(1, 0));
  EXPECT_EQ(s.points_kind, Scenario::Points::explicit_list);
  EXPECT_TRUE(s.runs(Analysis::propagation));
  EXPECT_FALSE(s.runs(Analysis::cone));
  EXPECT_EQ(s.entries.size(), 10u);
  EXPECT_EQ(s.entries[1], std::make_pair(std::string("cost"), std::string("quadratic")));

  const auto p = parse_scenario("target.region = annulus(0.4, 1)\ntarget.points = polar(9, 24)\n");
  EXPECT_EQ(p.points_kind, Scenario::Points::polar);
  EXPECT_EQ(p.polar_rings, 9);
  EXPECT_DOUBLE_EQ(p.polar_r_out, 1.0);
  EXPECT_EQ(parse_scenario("target.points = 150").point_count, 150u);
}

TEST(ScenarioTest, ErrorsCarryLineNumbers) {
  EXPECT_EQ(config_line("name = a\n\nbogus.key = 1\n"), 3);
  EXPECT_EQ(config_line("name = a\nname = b\n"), 2);
  EXPECT_EQ(config_line("# c\nno equals sign\n"), 2);
  EXPECT_EQ(config_line("cost = cubic\n"), 1);
  EXPECT_EQ(config_line("x = 1\n"), 1);
  EXPECT_EQ(config_line("name = a\nmesh.resolution = 32\n"), 2);
  EXPECT_EQ(config_line("source.density = checkerboard\nsource.contrast = 0.5\n"), 2);
  EXPECT_EQ(config_line("source.region = hexagon\n"), 1);
  EXPECT_EQ(config_line("target.points = polar(9,24)\n"), 1);
  EXPECT_EQ(config_line("\nanalyses = isolation\n"), 2);
  EXPECT_EQ(config_line("analyses = singular, everything\n"), 1);
  EXPECT_EQ(config_line("solver.tol = abc\n"), 1);
  EXPECT_EQ(config_line(kTwoPoint), -1);
}

TEST(ScenarioTest, PresetsParse) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(OTLAB_PRESET_DIR))
    if (e.path().extension() == ".cfg") {
      EXPECT_NO_THROW(load_scenario(e.path())) << e.path();
      ++n;
    }
  EXPECT_GE(n, 7u);
}

TEST(RunTest, TwoPointReportAndCsv) {
  auto report = run_scenario(parse_scenario(kTwoPoint));
  EXPECT_TRUE(report.all_pass());
  for (const auto& v : report.verdicts) EXPECT_TRUE(v.pass) << v.name << ": " << v.detail;
  ASSERT_TRUE(report.isolation);
  EXPECT_EQ(report.isolation->components.size(), 1u);

  const auto dir = scratch("two_point");
  const auto files = export_csv(report, dir);
  EXPECT_EQ(lines(slurp(dir / "masses.csv")), 1 + 2u);
  EXPECT_EQ(lines(slurp(dir / "potential.csv")), 1 + 2u);
  EXPECT_EQ(lines(slurp(dir / "tessellation.csv")), 1 + 64u * 64u);
  const std::string masses = slurp(dir / "masses.csv");
  EXPECT_NE(masses.find("0,-1,0,0.5,0.5\n"), std::string::npos) << masses;
  const std::string verdicts = slurp(dir / "verdicts.csv");
  EXPECT_EQ(verdicts.rfind("verdict,pass,detail\n", 0), 0u);
  EXPECT_EQ(verdicts.find(",0,"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "singular.csv"));
  EXPECT_FALSE(fs::exists(dir / "estimates.csv"));
}

TEST(RunTest, NumbersHaveTwelveDigits) {
  auto report = run_scenario(parse_scenario(kTwoPoint));
  const auto dir = scratch("digits");
  export_csv(report, dir);
  std::istringstream in(slurp(dir / "tessellation.csv"));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  // Pixel (0,0) of a 64-cell raster of [-1,1]: center -1 + 1/64.
  EXPECT_EQ(line, "0,0,0,-0.984375,-0.984375,0");
  auto r2 = report;
  r2.phi = r2.phi->with_lambda({0.0, 1.0 / 3.0});
  const auto d2 = scratch("digits2");
  export_csv(r2, d2);
  EXPECT_NE(slurp(d2 / "potential.csv").find("1,0.333333333333\n"), std::string::npos);
}

TEST(RunTest, ConvexTargetHasEmptySingularCsv) {
  auto s = parse_scenario(R"(
name = convex
mesh.resolution = 64
source.region = square
target.region = square(-0.5,-0.5,0.5,0.5)
target.points = 30
analyses = singular, isolation, holes
expect.singular = empty
expect.holes = 0
)");
  auto report = run_scenario(s);
  EXPECT_TRUE(report.all_pass());
  const auto dir = scratch("convex");
  export_csv(report, dir);
  EXPECT_EQ(slurp(dir / "singular.csv"), "pixel,col,row,x,y,component,jump\n");
  EXPECT_EQ(lines(slurp(dir / "masses.csv")), 1 + report.nu->size());
  EXPECT_EQ(lines(slurp(dir / "holes.csv")), 1u);
}

TEST(RunTest, FailVerdictsNameTheirSlack) {
  auto s = parse_scenario(std::string(kTwoPoint) + "solver.max_iter = 1\ntarget.weights = 0.2, 0.8\n");
  s.tol = 1e-300;  // unreachable: the solver verdict must fail, not throw
  const auto report = run_scenario(s);
  EXPECT_FALSE(report.all_pass());
  const auto& v = report.verdicts.front();
  EXPECT_EQ(v.name, "solver");
  EXPECT_FALSE(v.pass);
  EXPECT_NE(v.detail.find("max |mass - weight|"), std::string::npos);
  EXPECT_NE(v.detail.find("slack -"), std::string::npos) << v.detail;
}

TEST(RunTest, SectionsAndEstimatesCsv) {
  auto s = parse_scenario(R"(
name = pyramid
mesh.resolution = 128
source.region = square
target.region = square
target.points = 0.477668244563 0.147760103331, -0.366798125432 0.339792782707, -0.110870119131 -0.487552886038
potential.lambda = 0, 0, 0
analyses = sections, aleksandrov, cone
sections.base = 0 0
sections.p = 0 0
sections.heights = 0.2, 0.1, 0.05
cone.random = 2
)");
  auto report = run_scenario(s);
  ASSERT_EQ(report.sections.size(), 3u);
  ASSERT_TRUE(report.aleksandrov);
  const auto dir = scratch("pyramid");
  export_csv(report, dir);
  std::istringstream in(slurp(dir / "estimates.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line,
            "scenario,h,gap,volume,ell,plane_distance_lo,plane_distance_hi,ratio,loeper_max_violation,"
            "monotonicity_max_violation");
  // The ratios grow like h^-2 as h decreases, as the CSV records them.
  std::vector<double> ratios;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) f.push_back(c);
    ASSERT_EQ(f.size(), 10u);
    EXPECT_EQ(f[0], "pyramid");
    ratios.push_back(std::stod(f[7]));
  }
  ASSERT_EQ(ratios.size(), 3u);
  EXPECT_LT(ratios[0], ratios[1]);
  EXPECT_LT(ratios[1], ratios[2]);
  for (const auto& v : report.verdicts)
    if (v.name == "aleksandrov.stability") EXPECT_FALSE(v.pass) << v.detail;
  EXPECT_EQ(lines(slurp(dir / "cones.csv")), 1 + report.cones.size());
}

TEST(SvgTest, TwoPointCellsAreTwoHalves) {
  auto report = run_scenario(parse_scenario(kTwoPoint));
  const std::string doc = svg_document(report, SvgLayer::cells);
  EXPECT_EQ(doc.rfind("<?xml", 0), 0u);
  EXPECT_NE(doc.find("version=\"1.1\""), std::string::npos);
  std::set<std::string> fills;
  const std::regex rect("<rect x=\"([0-9.]+)\" y=\"[0-9.]+\" width=\"([0-9.]+)\"[^>]*fill=\"(#[0-9a-f]{6})\"");
  std::size_t rects = 0;
  for (auto it = std::sregex_iterator(doc.begin(), doc.end(), rect); it != std::sregex_iterator(); ++it) {
    ++rects;
    fills.insert((*it)[3]);
    const double x = std::stod((*it)[1]), w = std::stod((*it)[2]);
    // Canvas 512 wide over [-1,1]: the split x1 = 0 is at 256.
    EXPECT_TRUE(x + w <= 256.0 + 1e-9 || x >= 256.0 - 1e-9) << x << " " << w;
  }
  EXPECT_EQ(rects, 2u * 64u);
  EXPECT_EQ(fills.size(), 2u);
}

TEST(SvgTest, DeterministicAndMissingLayers) {
  auto a = run_scenario(parse_scenario(kTwoPoint));
  auto b = run_scenario(parse_scenario(kTwoPoint));
  for (SvgLayer l : available_layers(a)) EXPECT_EQ(svg_document(a, l), svg_document(b, l)) << to_string(l);
  EXPECT_EQ(available_layers(a).size(), 3u);
  try {
    svg_document(a, SvgLayer::section);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingLayer);
  }
  EXPECT_EQ(parse_svg_layer("subdiff"), SvgLayer::subdiff);
  EXPECT_THROW(parse_svg_layer("heatmap"), Error);
}

TEST(SvgTest, SingularMarkerAndSectionOutline) {
  auto s = parse_scenario(R"(
name = annulus
mesh.resolution = 128
source.region = disk(1)
target.region = annulus(0.4,1)
target.points = polar(9,24)
analyses = singular, isolation, sections
sections.heights = 0.1
)");
  auto report = run_scenario(s);
  ASSERT_TRUE(report.singular);
  EXPECT_LE(report.singular->pixels.size(), 4u);
  const std::string sing = svg_document(report, SvgLayer::singular);
  EXPECT_NE(sing.find("<g id=\"isolated\""), std::string::npos);
  EXPECT_NE(sing.find("<circle"), std::string::npos);
  const std::string sec = svg_document(report, SvgLayer::section);
  EXPECT_NE(sec.find("<g id=\"section-0.1\""), std::string::npos);
  EXPECT_NE(sec.find("<path d=\"M"), std::string::npos);
  const auto dir = scratch("svg");
  const auto path = render_svg(report, SvgLayer::subdiff, dir);
  EXPECT_EQ(path.filename(), "subdiff.svg");
  EXPECT_NE(slurp(path).find("<polygon"), std::string::npos);
}

TEST(DeterminismTest, CsvBytesRepeat) {
  const auto s = parse_scenario(kTwoPoint);
  auto a = run_scenario(s), b = run_scenario(s);
  const auto da = scratch("det_a"), db = scratch("det_b");
  const auto fa = export_csv(a, da);
  const auto fb = export_csv(b, db);
  ASSERT_EQ(fa.size(), fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_EQ(slurp(fa[i]), slurp(fb[i])) << fa[i].filename();
  EXPECT_EQ(report_json(a), report_json(b));
}

}  // namespace
}  // namespace otlab
