#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace otlab {

// Points of the source and target charts and co-vectors at those points all
// live in the Euclidean plane; the aliases only document intent.
using Vec2 = Eigen::Vector2d;
using Point2 = Eigen::Vector2d;
using CoVec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class ErrorCode {
  InvalidArgument,
  NoConvergence,
  OutOfChart,
  DegeneratePair,
  ResolutionTooCoarse,
  EmptySet,
  DisconnectedSupport,
  SingularPoint,
  NotSingular,
  NoPuncturedNeighborhood,
  EmptySection,
  BoundaryTouching,
  DegenerateSection,
  MissingLayer,
  Config,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline Vec2 perp(const Vec2& v) { return Vec2(-v.y(), v.x()); }

}  // namespace otlab
