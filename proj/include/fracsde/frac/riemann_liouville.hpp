#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fracsde/frac/grid_function.hpp"

namespace fracsde::frac {

namespace detail {

// I^α of the piecewise-linear interpolant of f (trapezoidal product integration):
// I^α f(t_k) = dt^α/Γ(α+2) [w_k f_0 + Σ_{j=1}^{k-1} a_{k-j} f_j + f_k].
inline std::vector<double> rl_integral_scalar(const std::vector<double>& f, double dt, double alpha) {
  const std::size_t n = f.size() - 1;
  std::vector<double> p1(n + 2), pa(n + 1);
  for (std::size_t m = 0; m <= n + 1; ++m) p1[m] = std::pow(static_cast<double>(m), alpha + 1.0);
  for (std::size_t m = 0; m <= n; ++m) pa[m] = std::pow(static_cast<double>(m), alpha);
  std::vector<double> a(n + 1, 0.0);
  for (std::size_t m = 1; m < n; ++m) a[m] = p1[m + 1] - 2.0 * p1[m] + p1[m - 1];
  const double c = std::pow(dt, alpha) / std::tgamma(alpha + 2.0);
  std::vector<double> out(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    const double km1 = static_cast<double>(k) - 1.0;
    double acc = (p1[k - 1] - (km1 - alpha) * pa[k]) * f[0];
    for (std::size_t j = 1; j < k; ++j) acc += a[k - j] * f[j];
    acc += f[k];
    out[k] = c * acc;
  }
  return out;
}

// D^α of the piecewise-linear interpolant of f (L1 product formula):
// D^α f(t_k) = f_0 t_k^{-α}/Γ(1-α) + dt^{-α}/Γ(2-α) Σ_{j<k} (f_{j+1}-f_j) b_{k-j},
// b_m = m^{1-α} - (m-1)^{1-α}. Node 0 is 0 when f_0 = 0 and ±inf otherwise.
inline std::vector<double> rl_derivative_scalar(const std::vector<double>& f, double dt, double alpha) {
  const std::size_t n = f.size() - 1;
  std::vector<double> p(n + 1), b(n + 1, 0.0);
  for (std::size_t m = 0; m <= n; ++m) p[m] = std::pow(static_cast<double>(m), 1.0 - alpha);
  for (std::size_t m = 1; m <= n; ++m) b[m] = p[m] - p[m - 1];
  const double c = std::pow(dt, -alpha) / std::tgamma(2.0 - alpha);
  const double c0 = std::pow(dt, -alpha) / std::tgamma(1.0 - alpha);
  std::vector<double> out(n + 1, 0.0);
  if (f[0] != 0.0) out[0] = std::copysign(HUGE_VAL, f[0]);
  for (std::size_t k = 1; k <= n; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += (f[j + 1] - f[j]) * b[k - j];
    out[k] = c * acc + (f[0] != 0.0 ? c0 * f[0] * std::pow(static_cast<double>(k), -alpha) : 0.0);
  }
  return out;
}

template <class Op>
GridFunction per_component(const GridFunction& f, Op op) {
  GridFunction out = GridFunction::zeros(f.dt, f.n_steps, f.d);
  for (std::size_t c = 0; c < f.d; ++c) out.set_component(c, op(f.component(c)));
  return out;
}

}  // namespace detail

// Left-sided Riemann-Liouville integral (1/Γ(α)) ∫_0^x f(t)(x-t)^{α-1} dt.
inline GridFunction rl_integral(const GridFunction& f, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("rl_integral: order must lie in (0,1]");
  return detail::per_component(f, [&](const std::vector<double>& x) { return detail::rl_integral_scalar(x, f.dt, alpha); });
}

// Left-sided Riemann-Liouville derivative d/dx I^{1-α} f.
inline GridFunction rl_derivative(const GridFunction& f, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("rl_derivative: order must lie in (0,1)");
  return detail::per_component(f, [&](const std::vector<double>& x) { return detail::rl_derivative_scalar(x, f.dt, alpha); });
}

// Multiplication by t^γ. Node 0 takes the one-sided limit 0 for γ > 0 and is set to 0
// for γ < 0 (the singular value is not represented).
inline GridFunction multiply_power(const GridFunction& f, double gamma) {
  GridFunction out = f;
  for (std::size_t i = 0; i < f.n_nodes(); ++i) {
    const double w = (i == 0) ? (gamma == 0.0 ? 1.0 : 0.0) : std::pow(f.t(i), gamma);
    for (std::size_t c = 0; c < f.d; ++c) out(i, c) = f(i, c) * w;
  }
  return out;
}

}  // namespace fracsde::frac
