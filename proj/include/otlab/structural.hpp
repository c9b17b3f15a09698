#pragma once

#include "otlab/cost.hpp"
#include "otlab/region.hpp"

#include <cstdint>
#include <random>

namespace otlab {

/// Deterministic uniform [0, 1) from a 64-bit engine (independent of the
/// standard library's distribution implementations).
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform point in the raster support of a region.
Point2 sample_region(const Region& region, std::mt19937_64& rng);

struct StructuralReport {
  std::size_t samples = 0;
  std::size_t skipped_invalid = 0;

  bool twist_ok = false;
  std::size_t twist_collisions = 0;
  double min_cogradient_separation = 0.0;  // over distinct sampled targets

  double min_abs_det = 0.0;  // min |det cross_hessian|
  bool nondeg_ok = false;

  double min_mtw = 0.0;
  MtwEvaluation worst_mtw;  // witness of min_mtw
  bool mtw_ok = false;      // min_mtw >= -kMtwSlack
};

constexpr double kMtwSlack = 1e-8;
constexpr double kTwistCollisionRadius = 1e-9;

/// Samples pairs (x, x̄) in the raster supports and checks twist (injectivity
/// of x̄ -> -Dc(x, x̄) over the sampled targets), nondegeneracy and the MTW sign.
/// Failures are recorded, never thrown.
StructuralReport verify_structural(const CostFunction& cost, const Region& source, const Region& target,
                                   std::size_t samples, std::uint64_t seed = 1);

}  // namespace otlab
