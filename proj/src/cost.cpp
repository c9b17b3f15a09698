#include "otlab/cost.hpp"

#include <array>
#include <cmath>

namespace otlab {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::OutOfChart: return "OutOfChart";
    case ErrorCode::DegeneratePair: return "DegeneratePair";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::DisconnectedSupport: return "DisconnectedSupport";
    case ErrorCode::SingularPoint: return "SingularPoint";
    case ErrorCode::NotSingular: return "NotSingular";
    case ErrorCode::NoPuncturedNeighborhood: return "NoPuncturedNeighborhood";
    case ErrorCode::EmptySection: return "EmptySection";
    case ErrorCode::BoundaryTouching: return "BoundaryTouching";
    case ErrorCode::DegenerateSection: return "DegenerateSection";
    case ErrorCode::MissingLayer: return "MissingLayer";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

std::string to_string(CostId id) {
  switch (id) {
    case CostId::quadratic: return "quadratic";
    case CostId::bilinear: return "bilinear";
    case CostId::log: return "log";
    case CostId::sqrt_plus: return "sqrt_plus";
  }
  return "unknown";
}

CostId parse_cost_id(std::string_view name) {
  if (name == "quadratic") return CostId::quadratic;
  if (name == "bilinear") return CostId::bilinear;
  if (name == "log") return CostId::log;
  if (name == "sqrt_plus") return CostId::sqrt_plus;
  throw Error(ErrorCode::Config, "unknown cost id '" + std::string(name) + "'");
}

double CostFunction::eval(const Point2& x, const Point2& xbar) const {
  const Vec2 r = x - xbar;
  switch (id_) {
    case CostId::quadratic: return 0.5 * r.squaredNorm();
    case CostId::bilinear: return -x.dot(xbar);
    case CostId::log: return -0.5 * std::log(r.squaredNorm());
    case CostId::sqrt_plus: return std::sqrt(1.0 + r.squaredNorm());
  }
  return 0.0;
}

CoVec2 CostFunction::grad_x(const Point2& x, const Point2& xbar) const {
  const Vec2 r = x - xbar;
  switch (id_) {
    case CostId::quadratic: return r;
    case CostId::bilinear: return -xbar;
    case CostId::log: return -r / r.squaredNorm();
    case CostId::sqrt_plus: return r / std::sqrt(1.0 + r.squaredNorm());
  }
  return CoVec2::Zero();
}

CoVec2 CostFunction::grad_xbar(const Point2& x, const Point2& xbar) const {
  if (id_ == CostId::bilinear) return -x;
  // Every other built-in cost depends on x - x̄ only.
  return -grad_x(x, xbar);
}

Mat2 CostFunction::hess_x(const Point2& x, const Point2& xbar) const {
  const Vec2 r = x - xbar;
  switch (id_) {
    case CostId::quadratic: return Mat2::Identity();
    case CostId::bilinear: return Mat2::Zero();
    case CostId::log: {
      const double rho2 = r.squaredNorm();
      return -(Mat2::Identity() / rho2 - 2.0 * r * r.transpose() / (rho2 * rho2));
    }
    case CostId::sqrt_plus: {
      const double s = std::sqrt(1.0 + r.squaredNorm());
      return Mat2::Identity() / s - r * r.transpose() / (s * s * s);
    }
  }
  return Mat2::Zero();
}

Mat2 CostFunction::cross_hessian(const Point2& x, const Point2& xbar) const {
  if (id_ == CostId::bilinear) return Mat2::Identity();
  // For c = k(x - x̄): -∂x_i ∂x̄_j c = ∂r_i ∂r_j k.
  return hess_x(x, xbar);
}

bool CostFunction::valid_pair(const Point2& x, const Point2& xbar) const {
  if (!x.allFinite() || !xbar.allFinite()) return false;
  if (id_ == CostId::log) return (x - xbar).norm() >= kMinLogSeparation;
  return true;
}

double CostFunction::derivative_scale(const Point2& x, const Point2& xbar) const {
  const double rho = (x - xbar).norm();
  switch (id_) {
    case CostId::log: return std::max(rho, kMinLogSeparation);
    case CostId::sqrt_plus: return std::max(1.0, rho);
    default: return 1.0;
  }
}

namespace {

constexpr double kResidualTol = 1e-10;

double residual_scale(const CoVec2& p) { return std::max(1.0, p.norm()); }

void check_chart(const Point2& result, const std::optional<Chart>& chart) {
  if (chart && !chart->contains(result)) {
    throw Error(ErrorCode::OutOfChart, "c-exponential result leaves the declared chart");
  }
}

std::optional<Point2> closed_form_exp(CostId id, const Point2& base, const CoVec2& p) {
  switch (id) {
    case CostId::quadratic: return base + p;
    case CostId::bilinear: return p;
    case CostId::log: {
      const double n2 = p.squaredNorm();
      if (n2 == 0.0) return std::nullopt;
      return base - p / n2;
    }
    case CostId::sqrt_plus: {
      const double n2 = p.squaredNorm();
      if (n2 >= 1.0) return std::nullopt;
      return base + p / std::sqrt(1.0 - n2);
    }
  }
  return std::nullopt;
}

}  // namespace

Point2 c_exp_newton(const CostFunction& cost, const Point2& x, const CoVec2& p, const Point2& guess,
                    int max_iter) {
  Point2 xbar = guess;
  auto residual = [&](const Point2& y) -> CoVec2 { return -cost.grad_x(x, y) - p; };
  CoVec2 f = residual(xbar);
  for (int it = 0; it < max_iter; ++it) {
    if (f.norm() <= 1e-13 * residual_scale(p)) return xbar;
    const Mat2 jac = cost.cross_hessian(x, xbar);
    if (std::abs(jac.determinant()) < 1e-300) break;
    const Vec2 step = -jac.partialPivLu().solve(f);
    double t = 1.0;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      const Point2 trial = xbar + t * step;
      if (!cost.valid_pair(x, trial)) continue;
      const CoVec2 ft = residual(trial);
      if (ft.allFinite() && ft.norm() < f.norm()) {
        xbar = trial;
        f = ft;
        break;
      }
    }
    if (t < 1e-12) break;
  }
  if (f.norm() <= kResidualTol * residual_scale(p)) return xbar;
  throw Error(ErrorCode::NoConvergence, "Newton inversion of -Dc(x, .) did not converge");
}

Point2 c_exp_bar_newton(const CostFunction& cost, const Point2& xbar, const CoVec2& p,
                        const Point2& guess, int max_iter) {
  Point2 x = guess;
  auto residual = [&](const Point2& y) -> CoVec2 { return -cost.grad_xbar(y, xbar) - p; };
  CoVec2 f = residual(x);
  for (int it = 0; it < max_iter; ++it) {
    if (f.norm() <= 1e-13 * residual_scale(p)) return x;
    const Mat2 jac = cost.cross_hessian(x, xbar).transpose();
    if (std::abs(jac.determinant()) < 1e-300) break;
    const Vec2 step = -jac.partialPivLu().solve(f);
    double t = 1.0;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      const Point2 trial = x + t * step;
      if (!cost.valid_pair(trial, xbar)) continue;
      const CoVec2 ft = residual(trial);
      if (ft.allFinite() && ft.norm() < f.norm()) {
        x = trial;
        f = ft;
        break;
      }
    }
    if (t < 1e-12) break;
  }
  if (f.norm() <= kResidualTol * residual_scale(p)) return x;
  throw Error(ErrorCode::NoConvergence, "Newton inversion of -D̄c(., x̄) did not converge");
}

Point2 c_exp(const CostFunction& cost, const Point2& x, const CoVec2& p,
             const std::optional<Chart>& chart) {
  const auto closed = closed_form_exp(cost.id(), x, p);
  if (!closed) throw Error(ErrorCode::OutOfChart, "co-vector outside the image of -Dc(x, .)");
  Point2 xbar = *closed;
  if ((-cost.grad_x(x, xbar) - p).norm() > kResidualTol * residual_scale(p)) {
    xbar = c_exp_newton(cost, x, p, xbar);
  }
  check_chart(xbar, chart);
  return xbar;
}

Point2 c_exp_bar(const CostFunction& cost, const Point2& xbar, const CoVec2& p,
                 const std::optional<Chart>& chart) {
  // Every built-in cost is symmetric under x <-> x̄ in the form used by the
  // closed-form inverse, so the same formula applies with the roles swapped.
  const auto closed = closed_form_exp(cost.id(), xbar, p);
  if (!closed) throw Error(ErrorCode::OutOfChart, "co-vector outside the image of -D̄c(., x̄)");
  Point2 x = *closed;
  if ((-cost.grad_xbar(x, xbar) - p).norm() > kResidualTol * residual_scale(p)) {
    x = c_exp_bar_newton(cost, xbar, p, x);
  }
  check_chart(x, chart);
  return x;
}

MtwEvaluation MtwEvaluation::make(const Point2& x, const Point2& xbar, const Vec2& v,
                                  const CoVec2& eta) {
  MtwEvaluation e{x, xbar, v, eta, 0.0};
  const double vv = v.squaredNorm();
  if (vv > 0.0) e.eta = eta - (eta.dot(v) / vv) * v;
  return e;
}

namespace {

// Richardson-extrapolated central differences in x̄ of a matrix-valued function.
template <class F>
std::array<Mat2, 2> d1(const F& f, const Point2& xb, double h) {
  std::array<Mat2, 2> out;
  for (int p = 0; p < 2; ++p) {
    auto central = [&](double s) {
      Vec2 e = Vec2::Zero();
      e[p] = s;
      return Mat2((f(xb + e) - f(xb - e)) / (2.0 * s));
    };
    out[p] = (4.0 * central(0.5 * h) - central(h)) / 3.0;
  }
  return out;
}

template <class F>
std::array<std::array<Mat2, 2>, 2> d2(const F& f, const Point2& xb, double h) {
  std::array<std::array<Mat2, 2>, 2> out;
  const Mat2 f0 = f(xb);
  for (int r = 0; r < 2; ++r) {
    for (int s = r; s < 2; ++s) {
      auto central = [&](double t) {
        Vec2 er = Vec2::Zero();
        Vec2 es = Vec2::Zero();
        er[r] = t;
        es[s] = t;
        if (r == s) return Mat2((f(xb + er) - 2.0 * f0 + f(xb - er)) / (t * t));
        return Mat2((f(xb + er + es) - f(xb + er - es) - f(xb - er + es) + f(xb - er - es)) /
                    (4.0 * t * t));
      };
      out[r][s] = (4.0 * central(0.5 * h) - central(h)) / 3.0;
      out[s][r] = out[r][s];
    }
  }
  return out;
}

}  // namespace

double mtw_term(const CostFunction& cost, const MtwEvaluation& e) {
  if (!cost.valid_pair(e.x, e.xbar)) {
    throw Error(ErrorCode::DegeneratePair, "invalid (x, x̄) pair for cost " + cost.name());
  }
  const Mat2 cross = cost.cross_hessian(e.x, e.xbar);
  if (std::abs(cross.determinant()) < 1e-12) {
    throw Error(ErrorCode::DegeneratePair, "cross-Hessian is singular");
  }
  // B_{qp} = c_{q,p} = -cross_{qp};  c^{p,q} = (B^{-1})_{pq}.
  const Mat2 b_inv = (-cross).inverse();
  const double h = 2e-3 * cost.derivative_scale(e.x, e.xbar);

  auto hess = [&](const Point2& xb) { return cost.hess_x(e.x, xb); };
  auto mixed = [&](const Point2& xb) { return cost.cross_hessian(e.x, xb); };
  const auto dh = d1(hess, e.xbar, h);    // dh[p](i,j) = c_{ij,p}
  const auto dx = d1(mixed, e.xbar, h);   // dx[s](q,r) = -c_{q,rs}
  const auto ddh = d2(hess, e.xbar, h);   // ddh[r][s](i,j) = c_{ij,rs}

  const Vec2 w = b_inv * e.eta;
  Vec2 a;
  Vec2 ev = Vec2::Zero();
  Mat2 q;
  for (int p = 0; p < 2; ++p) a[p] = e.v.dot(dh[p] * e.v);
  for (int r = 0; r < 2; ++r) {
    for (int s = 0; s < 2; ++s) {
      q(r, s) = e.v.dot(ddh[r][s] * e.v);
      for (int qi = 0; qi < 2; ++qi) ev[qi] += -dx[s](qi, r) * w[r] * w[s];
    }
  }
  return a.dot(b_inv * ev) - w.dot(q * w);
}

}  // namespace otlab
