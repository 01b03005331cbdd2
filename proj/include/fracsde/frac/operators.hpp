#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fracsde/fbm/kernel.hpp"
#include "fracsde/frac/grid_function.hpp"
#include "fracsde/frac/riemann_liouville.hpp"

namespace fracsde::frac {

namespace detail {
inline void require_rough(double H, const char* who) {
  if (!(H > 0.0 && H < 0.5)) throw std::domain_error(std::string(who) + ": requires 0 < H < 1/2 (unsupported regime)");
}
}  // namespace detail

// Factor linking the fractional-operator form of K_H to kernel integration when
// C_H normalizes Var(B_t) = t^{2H}: ∫_0^t K_H(t,s)φ(s)ds = C_H Γ(H+1/2) · I^{2H}s^{1/2-H}I^{1/2-H}s^{H-1/2}φ.
inline double operator_constant(double H) { return fbm::kernel_constant(H) * std::tgamma(H + 0.5); }

// (K_H φ)(t) = ∫_0^t K_H(t,s)φ(s)ds via C_H Γ(H+1/2) I^{2H} s^{1/2-H} I^{1/2-H} s^{H-1/2} φ.
inline GridFunction apply_KH(const GridFunction& phi, double H) {
  detail::require_rough(H, "apply_KH");
  auto g = multiply_power(phi, H - 0.5);
  g = rl_integral(g, 0.5 - H);
  g = multiply_power(g, 0.5 - H);
  g = rl_integral(g, 2.0 * H);
  return operator_constant(H) * std::move(g);
}

// K_H^{-1} φ = (C_H Γ(H+1/2))^{-1} s^{1/2-H} D^{1/2-H} s^{H-1/2} D^{2H} φ.
inline GridFunction apply_KH_inverse(const GridFunction& phi, double H) {
  detail::require_rough(H, "apply_KH_inverse");
  auto g = rl_derivative(phi, 2.0 * H);
  g = multiply_power(g, H - 0.5);
  g = rl_derivative(g, 0.5 - H);
  g = multiply_power(g, 0.5 - H);
  return (1.0 / operator_constant(H)) * std::move(g);
}

// (K_H* φ)(s) = K_H(T,s)φ(s) + ∫_s^T (φ(t)-φ(s)) ∂K_H/∂t(t,s) dt on the grid ending at T.
// With g(u) = (φ(u)-φ(s)) u^{H-1/2} taken piecewise linear, each cell integral against
// (u-s)^{H-3/2} is exact; g vanishes at u = s so the first cell converges.
// Nodes 0 and n, where K_H(T,·) is singular, are set to 0.
inline GridFunction transfer_KHstar(const GridFunction& phi, double H, double T) {
  if (!(H > 0.0 && H <= 0.5)) throw std::domain_error("transfer_KHstar: H must lie in (0, 1/2]");
  if (std::abs(phi.T() - T) > 1e-12 * T) throw std::domain_error("transfer_KHstar: grid must end at T");
  const std::size_t n = phi.n_steps;
  const double dt = phi.dt;
  GridFunction out = GridFunction::zeros(dt, n, phi.d);
  if (H == 0.5) {
    for (std::size_t i = 1; i < n; ++i)
      for (std::size_t c = 0; c < phi.d; ++c) out(i, c) = phi(i, c);
    return out;
  }
  const double beta = H - 1.5;
  // Scaled cell moments on [m, m+1]: I0 = ∫ x^β, I1 = ∫ x^β (x-m).
  std::vector<double> w_lo(n + 1, 0.0), w_hi(n + 1, 0.0);
  w_hi[0] = 1.0 / (beta + 2.0);
  for (std::size_t m = 1; m < n; ++m) {
    const double mm = static_cast<double>(m);
    const double i0 = (std::pow(mm + 1.0, beta + 1.0) - std::pow(mm, beta + 1.0)) / (beta + 1.0);
    const double i1 = (std::pow(mm + 1.0, beta + 2.0) - std::pow(mm, beta + 2.0)) / (beta + 2.0) - mm * i0;
    w_lo[m] = i0 - i1;
    w_hi[m] = i1;
  }
  const double scale = std::pow(dt, beta + 1.0);
  const double ch = fbm::kernel_constant(H);
  std::vector<double> upow(n + 1);
  for (std::size_t j = 1; j <= n; ++j) upow[j] = std::pow(phi.t(j), H - 0.5);
  for (std::size_t i = 1; i < n; ++i) {
    const double s = phi.t(i);
    const double kts = fbm::kernel_K_gap(T, s, static_cast<double>(n - i) * dt, H);
    const double pref = ch * (H - 0.5) * std::pow(s, 0.5 - H) * scale;
    for (std::size_t c = 0; c < phi.d; ++c) {
      const double fi = phi(i, c);
      double acc = 0.0;
      for (std::size_t j = i; j < n; ++j) {
        const std::size_t m = j - i;
        const double g0 = (phi(j, c) - fi) * upow[j];
        const double g1 = (phi(j + 1, c) - fi) * upow[j + 1];
        acc += w_lo[m] * g0 + w_hi[m] * g1;
      }
      out(i, c) = kts * fi + pref * acc;
    }
  }
  return out;
}

// ∫_0^T f(s) g(s) ds for fields behaving like s^{H-1/2} and (T-s)^{H-1/2} at the ends
// (outputs of transfer_KHstar). The product divided by w(s) = s^{2H-1}(T-s)^{2H-1} is
// taken piecewise linear, extended flat into the two end cells, and integrated against w.
inline double weighted_l2_inner(const GridFunction& f, const GridFunction& g, double H, std::size_t c = 0) {
  if (!f.same_grid(g)) throw std::invalid_argument("weighted_l2_inner: grid mismatch");
  const std::size_t n = f.n_steps;
  if (n < 2) throw std::domain_error("weighted_l2_inner: need at least two cells");
  const double T = f.T(), e = 2.0 * H - 1.0;
  std::vector<double> q(n + 1, 0.0);
  for (std::size_t i = 1; i < n; ++i) q[i] = f(i, c) * g(i, c) / (std::pow(f.t(i), e) * std::pow(T - f.t(i), e));
  q[0] = q[1];
  q[n] = q[n - 1];
  const quad::QuadSpec spec{1e-14, 1e-10, 200};
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double a = f.t(j), b = f.t(j + 1), h = b - a;
    // ds: distance from a, dT: distance from T.
    auto term = [&](double s, double ds, double dT) {
      const double x = ds / h;
      return std::pow(s, e) * std::pow(dT, e) * ((1.0 - x) * q[j] + x * q[j + 1]);
    };
    if (j == 0)
      total += quad::integrate_left_power([&](double s, double ds, double) { return term(s, ds, T - s); }, a, b, e, spec).value;
    else if (j == n - 1)
      total += quad::integrate_right_power([&](double s, double ds, double db) { return term(s, ds, db); }, a, b, e, spec).value;
    else
      total += quad::integrate([&](double s) { return term(s, s - a, T - s); }, a, b, spec).value;
  }
  return total;
}

}  // namespace fracsde::frac
