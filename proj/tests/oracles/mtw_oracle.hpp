#pragma once

// Cross-curvature oracle for the MTW tensor, written independently of the
// library: costs and c-exponentials are re-derived here and the tensor is
// the mixed fourth difference
//   -d²/dt² d²/ds² c(x0 + t V, xbar(s)),   -Dc(x0, xbar(s)) = p0 + s eta,
// at t = s = 0.

#include <cmath>
#include <string>

namespace oracle {

struct P {
  double x, y;
};

inline double cost(const std::string& id, P a, P b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  const double r2 = dx * dx + dy * dy;
  if (id == "quadratic") return 0.5 * r2;
  if (id == "bilinear") return -(a.x * b.x + a.y * b.y);
  if (id == "log") return -0.5 * std::log(r2);
  return std::sqrt(1.0 + r2);  // sqrt_plus
}

// -D_x c(x, xbar)
inline P cogradient(const std::string& id, P a, P b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double r2 = dx * dx + dy * dy;
  if (id == "quadratic") return {dx, dy};
  if (id == "bilinear") return {b.x, b.y};
  if (id == "log") return {-dx / r2, -dy / r2};
  const double s = std::sqrt(1.0 + r2);
  return {dx / s, dy / s};
}

// Solves cogradient(x, xbar) = p for xbar.
inline P exp_at(const std::string& id, P x, P p) {
  const double n2 = p.x * p.x + p.y * p.y;
  if (id == "quadratic") return {x.x + p.x, x.y + p.y};
  if (id == "bilinear") return p;
  if (id == "log") return {x.x - p.x / n2, x.y - p.y / n2};
  const double s = 1.0 / std::sqrt(1.0 - n2);
  return {x.x + p.x * s, x.y + p.y * s};
}

inline double mixed(const std::string& id, P x0, P xb0, P v, P eta, double h) {
  const P p0 = cogradient(id, x0, xb0);
  double acc = 0.0;
  const double w[3] = {1.0, -2.0, 1.0};
  for (int a = -1; a <= 1; ++a) {
    for (int b = -1; b <= 1; ++b) {
      const P x{x0.x + a * h * v.x, x0.y + a * h * v.y};
      const P xb = exp_at(id, x0, {p0.x + b * h * eta.x, p0.y + b * h * eta.y});
      acc += w[a + 1] * w[b + 1] * cost(id, x, xb);
    }
  }
  return -acc / (h * h * h * h);
}

/// Richardson-combined fourth difference (second order error removed).
inline double mtw(const std::string& id, P x0, P xb0, P v, P eta, double h = 2e-2) {
  const double a = mixed(id, x0, xb0, v, eta, h);
  const double b = mixed(id, x0, xb0, v, eta, 0.5 * h);
  return (4.0 * b - a) / 3.0;
}

}  // namespace oracle
