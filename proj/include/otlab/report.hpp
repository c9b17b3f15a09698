#pragma once

#include "otlab/estimates.hpp"
#include "otlab/geometry.hpp"
#include "otlab/scenario.hpp"
#include "otlab/singular.hpp"
#include "otlab/structural.hpp"
#include "otlab/transport.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace otlab {

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;  // the inequality checked and its measured slack
};

struct RefinementRun {
  int resolution = 0;
  std::size_t singular_pixels = 0;
  std::size_t components = 0;
  std::size_t isolated = 0;
};

struct PropagationSample {
  std::size_t component = 0;
  Point2 representative = Point2::Zero();
  double gap = 0.0;
};

struct HoleFill {
  std::size_t component = 0;
  std::size_t hole = 0;
  double distance = 0.0;  // Hausdorff, in target coordinates
};

struct ConeRecord {
  CConeFn cone;
  ConeInclusion inclusion;
  bool random = false;
  bool focus_interior = false;
};

struct RunReport {
  Scenario scenario;
  std::optional<SourceDensity> mu;
  std::optional<DiscreteTarget> nu;
  std::optional<DualPotential> phi;

  bool solved = false;  // false when the potential was given
  bool converged = false;
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> masses;
  std::optional<LaguerreTessellation> tessellation;

  std::optional<StructuralReport> structural;
  std::optional<HoleReport> holes;
  std::optional<SingularSet> singular;
  std::optional<IsolationReport> isolation;
  std::vector<HoleFill> hole_fill;
  std::vector<RefinementRun> refinements;
  std::vector<PropagationSample> propagation;
  std::optional<LoeperSweep> loeper;
  std::optional<double> monotonicity;
  std::size_t monotonicity_pairs = 0;
  std::vector<Section> sections;
  std::optional<AleksandrovResult> aleksandrov;
  std::vector<ConeRecord> cones;

  std::vector<Verdict> verdicts;
  std::vector<std::filesystem::path> artifacts;

  bool all_pass() const;
};

/// Runs the solve and every requested analysis in dependency order. Solver
/// non-convergence and analysis preconditions that fail on the data become
/// FAIL verdicts; only configuration errors throw.
RunReport run_scenario(const Scenario& s);

/// One CSV per analysis that ran, plus verdicts.csv. Returns the paths written
/// (also appended to report.artifacts).
std::vector<std::filesystem::path> export_csv(RunReport& report, const std::filesystem::path& dir);

enum class SvgLayer { cells, singular, subdiff, section };
std::string to_string(SvgLayer layer);
SvgLayer parse_svg_layer(std::string_view name);

/// Throws MissingLayer if the analysis behind the layer did not run.
std::filesystem::path render_svg(RunReport& report, SvgLayer layer, const std::filesystem::path& dir);
/// The SVG document itself.
std::string svg_document(const RunReport& report, SvgLayer layer);

/// Layers whose analyses ran.
std::vector<SvgLayer> available_layers(const RunReport& report);

/// Summary of the run as JSON (scenario echo, solver, verdicts, artifacts).
std::string report_json(const RunReport& report);

}  // namespace otlab
