#pragma once

#include "otlab/types.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace otlab {

enum class CostId { quadratic, bilinear, log, sqrt_plus };

std::string to_string(CostId id);
/// Throws Error(Config) for an unknown id.
CostId parse_cost_id(std::string_view name);

/// Axis-aligned box a c-exponential result must stay in.
struct Chart {
  Point2 lo;
  Point2 hi;
  bool contains(const Point2& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
  }
};

// A cost c(x, x̄) on R^2 x R^2 with closed-form derivatives up to order two.
//
//   quadratic  c = |x - x̄|^2 / 2
//   bilinear   c = -<x, x̄>
//   log        c = -log |x - x̄|          (pairs closer than 1e-3 are invalid)
//   sqrt_plus  c = sqrt(1 + |x - x̄|^2)
//
// Third and fourth mixed derivatives are obtained by Richardson-extrapolated
// central differences of the analytic second derivatives (see mtw_term).
class CostFunction {
 public:
  explicit CostFunction(CostId id) : id_(id) {}
  static CostFunction from_name(std::string_view name) { return CostFunction(parse_cost_id(name)); }

  CostId id() const { return id_; }
  std::string name() const { return to_string(id_); }

  double eval(const Point2& x, const Point2& xbar) const;
  /// Dc: gradient in x.
  CoVec2 grad_x(const Point2& x, const Point2& xbar) const;
  /// D̄c: gradient in x̄.
  CoVec2 grad_xbar(const Point2& x, const Point2& xbar) const;
  /// D²c in x (second derivatives in the source variable).
  Mat2 hess_x(const Point2& x, const Point2& xbar) const;
  /// -D̄Dc, entry (i, j) = -∂²c / ∂x_i ∂x̄_j.
  Mat2 cross_hessian(const Point2& x, const Point2& xbar) const;
  bool valid_pair(const Point2& x, const Point2& xbar) const;

  /// Length scale on which the second derivatives vary; sets finite-difference steps.
  double derivative_scale(const Point2& x, const Point2& xbar) const;

  static constexpr double kMinLogSeparation = 1e-3;

 private:
  CostId id_;
};

/// c-Exp_x(p): the x̄ with -Dc(x, x̄) = p. Closed form for every built-in cost,
/// polished by Newton if the residual exceeds 1e-10.
Point2 c_exp(const CostFunction& cost, const Point2& x, const CoVec2& p,
             const std::optional<Chart>& chart = std::nullopt);

/// c-Exp_x̄(p): the x with -D̄c(x, x̄) = p.
Point2 c_exp_bar(const CostFunction& cost, const Point2& xbar, const CoVec2& p,
                 const std::optional<Chart>& chart = std::nullopt);

/// Newton iteration on -Dc(x, ·) = p from `guess`, ignoring closed forms.
Point2 c_exp_newton(const CostFunction& cost, const Point2& x, const CoVec2& p, const Point2& guess,
                    int max_iter = 60);
/// Newton iteration on -D̄c(·, x̄) = p from `guess`.
Point2 c_exp_bar_newton(const CostFunction& cost, const Point2& xbar, const CoVec2& p,
                        const Point2& guess, int max_iter = 60);

/// One term of the MTW condition: base pair (x, x̄), a vector V at x and a
/// co-vector η at x with η(V) = 0.
struct MtwEvaluation {
  Point2 x;
  Point2 xbar;
  Vec2 v;
  CoVec2 eta;
  double value = 0.0;

  /// Projects eta onto the annihilator of v so that eta(v) = 0 exactly (up to rounding).
  static MtwEvaluation make(const Point2& x, const Point2& xbar, const Vec2& v, const CoVec2& eta);
};

/// Contracted MTW tensor
///   (c_{ij,p} c^{p,q} c_{q,rs} - c_{ij,rs}) c^{r,k} c^{s,l} V^i V^j η_k η_l.
/// Throws DegeneratePair if the cross-Hessian is numerically singular or the pair is invalid.
double mtw_term(const CostFunction& cost, const MtwEvaluation& e);

}  // namespace otlab
