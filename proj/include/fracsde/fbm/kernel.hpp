#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "fracsde/core/quadrature.hpp"

namespace fracsde::fbm {

inline double covariance(double t, double s, double H) {
  if (t < 0.0 || s < 0.0) throw std::domain_error("covariance: negative time");
  const double h2 = 2.0 * H;
  return 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::abs(t - s), h2));
}

namespace detail {

// The inner integral ∫_s^t r^{H-3/2}(r-s)^{H-1/2} dr equals s^{2H-1} J(s/t) under r = s/w, with
// J(x) = ∫_x^1 w^{-2H}(1-w)^{H-1/2} dw. The (1-w)^{H-1/2} endpoint is removed by
// the power substitution (1-w)^{H+1/2}; w^{-2H} at 0 by w^{1-2H}.
struct InnerTable {
  double H = -1.0;
  double j_half = 0.0;     // J(1/2)
  double left_half = 0.0;  // ∫_0^{1/2} w^{-2H}(1-w)^{H-1/2} dw
};

inline quad::QuadSpec inner_spec() { return {1e-15, 1e-11, 200}; }

inline double inner_integrand(double w, double one_minus_w, double H) {
  if (w <= 0.0 || one_minus_w <= 0.0) return 0.0;
  return std::pow(w, -2.0 * H) * std::pow(one_minus_w, H - 0.5);
}

// ∫_0^x w^{-2H}(1-w)^{H-1/2} dw. The w^{-2H} monomial is integrated exactly and the
// remainder w^{-2H}((1-w)^{H-1/2} - 1) vanishes like w^{1-2H}; substituting the raw
// w^{-2H} endpoint underflows once 1-2H is small.
inline double inner_left(double x, double H) {
  const double e = 1.0 - 2.0 * H;
  auto rem = [H](double w, double, double) {
    if (w <= 0.0) return 0.0;
    return std::pow(w, -2.0 * H) * std::expm1((H - 0.5) * std::log1p(-w));
  };
  return std::pow(x, e) / e + quad::integrate_left_power(rem, 0.0, x, e, inner_spec()).value;
}

inline const InnerTable& inner_table(double H) {
  thread_local InnerTable tab;
  if (tab.H != H) {
    auto gr = [H](double w, double, double db) { return inner_integrand(w, db, H); };
    tab.j_half = quad::integrate_right_power(gr, 0.5, 1.0, H - 0.5, inner_spec()).value;
    tab.left_half = inner_left(0.5, H);
    tab.H = H;
  }
  return tab;
}

// J(x) with 1 - x supplied separately.
inline double inner_J(double x, double one_minus_x, double H) {
  if (x >= 0.5) {
    auto gr = [H](double w, double, double db) { return inner_integrand(w, db, H); };
    return quad::integrate_right_power(gr, x, x + one_minus_x, H - 0.5, inner_spec()).value;
  }
  const auto& tab = inner_table(H);
  return tab.j_half + tab.left_half - inner_left(x, H);
}

// ∫_s^t r^{H-3/2}(r-s)^{H-1/2} dr, with gap = t - s.
inline double kernel_inner(double t, double s, double gap, double H) {
  return std::pow(s, 2.0 * H - 1.0) * inner_J(s / t, gap / t, H);
}

// Kernel without the constant C_H, with gap = t - s.
inline double kernel_unscaled(double t, double s, double gap, double H) {
  const double first = std::pow(t / s, H - 0.5) * std::pow(gap, H - 0.5);
  if (H == 0.5) return first;
  return first + (0.5 - H) * std::pow(s, 0.5 - H) * kernel_inner(t, s, gap, H);
}

inline double compute_kernel_constant(double H) {
  if (H == 0.5) return 1.0;
  auto sq = [&](double s, double ds, double db) {
    if (ds <= 0.0 || db <= 0.0) return 0.0;
    const double k = kernel_unscaled(1.0, s, db, H);
    return k * k;
  };
  const double e = 2.0 * H - 1.0;
  const double norm = quad::integrate_two_sided(sq, 0.0, 1.0, e, e, {1e-15, 1e-13, 4000}).value;
  return 1.0 / std::sqrt(norm);
}

}  // namespace detail

// C_H from the normalization ∫_0^1 K(1,s)^2 ds = 1; the kernel is homogeneous of
// degree H-1/2, so this fixes ∫_0^t K(t,s)^2 ds = t^{2H} for every t.
inline double kernel_constant(double H) {
  if (!(H > 0.0 && H <= 0.5)) throw std::domain_error("kernel_constant: H must lie in (0, 1/2]");
  thread_local double last_H = -1.0, last_C = 0.0;
  if (H == last_H) return last_C;
  static std::mutex mu;
  static std::map<double, double> cache;
  double c = 0.0;
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(H); it != cache.end()) c = it->second;
  }
  if (c == 0.0) {
    c = detail::compute_kernel_constant(H);
    std::lock_guard lock(mu);
    cache.emplace(H, c);
  }
  last_H = H;
  last_C = c;
  return c;
}

// K_H(t,s) with the gap t - s given explicitly (for callers that know it exactly).
inline double kernel_K_gap(double t, double s, double gap, double H) {
  if (s <= 0.0) throw std::domain_error("kernel_K: s must be positive");
  if (gap <= 0.0) return 0.0;
  if (!(H > 0.0 && H <= 0.5)) throw std::domain_error("kernel_K: H must lie in (0, 1/2]");
  if (H == 0.5) return 1.0;
  return kernel_constant(H) * detail::kernel_unscaled(t, s, gap, H);
}

inline double kernel_K(double t, double s, double H) { return kernel_K_gap(t, s, t - s, H); }

// ∂K/∂t for 0 < s < t.
inline double kernel_K_dt(double t, double s, double H) {
  if (s <= 0.0) throw std::domain_error("kernel_K_dt: s must be positive");
  if (s >= t || H == 0.5) return 0.0;
  return kernel_constant(H) * (H - 0.5) * std::pow(s, 0.5 - H) * std::pow(t, H - 0.5) * std::pow(t - s, H - 1.5);
}

// ∫_a^b K(t,u) du for 0 <= a < b <= t, with the endpoint power singularities substituted away.
inline double kernel_cell_integral(double t, double a, double b, double H,
                                   const quad::QuadSpec& spec = {1e-12, 1e-10, 400}) {
  if (H == 0.5) return b - a;
  const double e = H - 0.5;
  const bool left = (a == 0.0), right = (b >= t);
  auto k = [&](double u, double, double db) {
    if (u <= 0.0) return 0.0;
    const double gap = right ? db : t - u;
    return gap > 0.0 ? kernel_K_gap(t, u, gap, H) : 0.0;
  };
  if (left && right) return quad::integrate_two_sided(k, a, b, e, e, spec).value;
  if (left) return quad::integrate_left_power(k, a, b, e, spec).value;
  if (right) return quad::integrate_right_power(k, a, b, e, spec).value;
  auto kp = [&](double u) { return kernel_K(t, u, H); };
  return quad::integrate(kp, a, b, spec).value;
}

// Var(B_t | F_s) = ∫_s^t K(t,u)^2 du.
inline double conditional_variance(double t, double s, double H) {
  if (!(s >= 0.0) || s >= t) throw std::domain_error("conditional_variance: need 0 <= s < t");
  if (H == 0.5) return t - s;
  auto sq = [&](double u, double, double db) {
    if (u <= 0.0 || db <= 0.0) return 0.0;
    const double k = kernel_K_gap(t, u, db, H);
    return k * k;
  };
  const double e = 2.0 * H - 1.0;
  const quad::QuadSpec spec{1e-15, 1e-11, 4000};
  if (s == 0.0) return quad::integrate_two_sided(sq, 0.0, t, e, e, spec).value;
  return quad::integrate_right_power(sq, s, t, e, spec).value;
}

}  // namespace fracsde::fbm
