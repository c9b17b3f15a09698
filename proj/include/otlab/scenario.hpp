#pragma once

#include "otlab/cost.hpp"
#include "otlab/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace otlab {

enum class Analysis {
  structural,
  holes,
  singular,
  isolation,
  propagation,
  loeper,
  monotonicity,
  sections,
  aleksandrov,
  cone,
};

std::string to_string(Analysis a);

// Grammar (one entry per line, '#' starts a comment, blank lines ignored):
//   line  := key '=' value
//   key   := identifier ('.' identifier)*
//   value := text up to end of line; surrounding spaces and one pair of
//            double quotes are stripped. Lists are comma separated.
// Keys are documented in presets/README.md. Unknown or repeated keys are errors.
struct Scenario {
  std::string name = "scenario";
  CostId cost = CostId::quadratic;
  std::uint64_t seed = 1;
  int resolution = 256;

  std::string source_region = "square";
  bool checkerboard = false;
  double contrast = 1.0;  // Λ
  int checker_block = 8;

  std::string target_region = "square";
  enum class Points { stratified, polar, explicit_list } points_kind = Points::stratified;
  std::size_t point_count = 100;
  int polar_rings = 0;
  int polar_per_ring = 0;
  double polar_r_in = 0.0;  // taken from target.region = annulus(r_in, r_out)
  double polar_r_out = 0.0;
  std::vector<Point2> points;
  std::vector<double> weights;
  std::vector<double> lambda;  // nonempty: use this potential instead of solving

  double tol = 1e-10;
  int max_iter = 100;

  std::vector<Analysis> analyses;

  std::size_t structural_samples = 4000;
  std::vector<int> isolation_resolutions;  // extra resolutions for the isolated count
  double propagation_radius = 0.1;
  std::string loeper_source;  // empty: the cost's admissible preset
  std::string loeper_target;
  std::size_t loeper_samples = 20000;
  std::size_t monotonicity_pairs = 10000;
  std::optional<Point2> section_base;   // default: representative of the first isolated component
  std::optional<CoVec2> section_p;      // co-vector at the base; default: centroid of ∂u(base)
  std::vector<double> section_heights = {0.1, 0.05, 0.025};
  std::size_t cone_random = 10;

  std::optional<std::size_t> expect_holes;
  std::optional<std::size_t> expect_isolated;
  std::optional<bool> expect_singular;  // nonempty singular set

  std::vector<std::pair<std::string, std::string>> entries;  // as read, for the report echo

  bool runs(Analysis a) const;
};

/// Throws Error(Config) with "origin:line: message".
Scenario parse_scenario(std::string_view text, std::string_view origin = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

/// Source and target boxes on which a built-in cost is used by the checks.
struct CostDomains {
  std::string source;
  std::string target;
};
CostDomains admissible_domains(CostId id);

}  // namespace otlab
