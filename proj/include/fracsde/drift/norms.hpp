#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracsde/core/quadrature.hpp"
#include "fracsde/drift/field.hpp"

namespace fracsde::drift {

struct InfiniteNormError : std::domain_error {
  using std::domain_error::domain_error;
};

inline constexpr double inf = std::numeric_limits<double>::infinity();

namespace detail {

inline double sphere_area(std::size_t d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
  }
  throw std::domain_error("norm: d <= 3 supported");
}

// S_{d-1} ∫_0^rend r^{d-1} h(r) dr with a power singularity r^{sing} at 0.
template <class F>
double radial_integral(F&& h, std::size_t d, double rend, std::vector<double> breaks, double sing) {
  std::set<double> cuts{0.0, rend};
  for (double b : breaks)
    if (b > 0.0 && b < rend) cuts.insert(b);
  const std::vector<double> pts(cuts.begin(), cuts.end());
  const quad::QuadSpec spec{1e-14, 1e-11, 2000};
  auto f = [&](double r) { return std::pow(r, static_cast<double>(d) - 1.0) * h(r); };
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    if (k == 0) {
      auto g = [&](double r, double, double) { return f(r); };
      total += quad::integrate_left_power(g, pts[0], pts[1], std::min(sing + static_cast<double>(d) - 1.0, 0.0), spec).value;
    } else {
      total += quad::integrate(f, pts[k], pts[k + 1], spec).value;
    }
  }
  return sphere_area(d) * total;
}

// ∫_box h(x) dx: adaptive in d = 1 (split at 0), tensor Gauss-Legendre otherwise.
template <class F>
double box_integral(F&& h, std::size_t d, const Box& box, std::size_t resolution) {
  if (d == 1) {
    const quad::QuadSpec spec{1e-13, 1e-10, 4000};
    auto f = [&](double x) { return h(&x); };
    if (box.lo < 0.0 && box.hi > 0.0)
      return quad::integrate(f, box.lo, 0.0, spec).value + quad::integrate(f, 0.0, box.hi, spec).value;
    return quad::integrate(f, box.lo, box.hi, spec).value;
  }
  if (d > 3) throw std::domain_error("norm: d <= 3 supported");
  const auto rule = quad::gauss_legendre(8);
  const double cell = (box.hi - box.lo) / static_cast<double>(resolution);
  std::vector<double> nodes, weights;
  for (std::size_t c = 0; c < resolution; ++c)
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      nodes.push_back(box.lo + cell * (static_cast<double>(c) + 0.5 * (rule.nodes[k] + 1.0)));
      weights.push_back(0.5 * cell * rule.weights[k]);
    }
  const std::size_t m = nodes.size();
  double total = 0.0;
  std::vector<double> x(d);
  std::vector<std::size_t> idx(d, 0);
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < d; ++i) x[i] = nodes[idx[i]], w *= weights[idx[i]];
    total += w * h(x.data());
    std::size_t i = 0;
    while (i < d && ++idx[i] == m) idx[i++] = 0;
    if (i == d) break;
  }
  return total;
}

template <class F>
double box_sup(F&& h, std::size_t d, const Box& box, std::size_t resolution) {
  const std::size_t m = 8 * resolution + 1;
  std::vector<double> x(d);
  std::vector<std::size_t> idx(d, 0);
  double best = 0.0;
  while (true) {
    for (std::size_t i = 0; i < d; ++i)
      x[i] = box.lo + (box.hi - box.lo) * static_cast<double>(idx[i]) / static_cast<double>(m - 1);
    best = std::max(best, h(x.data()));
    std::size_t i = 0;
    while (i < d && ++idx[i] == m) idx[i++] = 0;
    if (i == d) break;
  }
  return best;
}

inline double time_factor(double q, double T) { return std::isinf(q) ? 1.0 : std::pow(T, 1.0 / q); }

inline void check_exponents(double p, double q) {
  if (!(p >= 1.0) || !(q >= 1.0)) throw std::domain_error("lpq_norm: requires p, q >= 1");
}

inline bool ball_inside(const Box& box, double r, std::size_t) { return box.lo <= -r && box.hi >= r; }

inline double singular_power_lp(const DriftField& b, double p, const Box& box) {
  const double gamma = b.param("gamma"), R = b.param("radius");
  const double dd = static_cast<double>(b.d);
  if (std::isinf(p) || gamma * p >= dd)
    throw InfiniteNormError("lpq_norm: |x|^{-gamma} is not in L^p near 0 since gamma*p = " + std::to_string(gamma * p) +
                            " >= d = " + std::to_string(b.d));
  const double e = 1.0 - gamma * p;
  if (b.d == 1) {
    auto F = [&](double x) { return (x < 0 ? -1.0 : 1.0) * std::pow(std::abs(x), e) / e; };
    const double a = std::max(box.lo, -R), c = std::min(box.hi, R);
    return c > a ? std::pow(F(c) - F(a), 1.0 / p) : 0.0;
  }
  if (!ball_inside(box, R, b.d)) throw std::domain_error("lpq_norm: box must contain the support ball for d > 1");
  return std::pow(sphere_area(b.d) * std::pow(R, dd - gamma * p) / (dd - gamma * p), 1.0 / p);
}

}  // namespace detail

// Spatial L^p(box) norm of b(t, ·) (all drift fields here are time-independent).
inline double lp_norm(const DriftField& b, double p, const Box& box, std::size_t resolution = 32) {
  detail::check_exponents(p, 1.0);
  if (b.kind == Kind::singular_power) return detail::singular_power_lp(b, p, box);
  const std::size_t d = b.d;
  std::vector<double> out(d);
  auto absb = [&](const double* x) {
    b.eval(0.0, x, out.data());
    return detail::norm2(out.data(), d);
  };
  if (std::isinf(p)) return detail::box_sup(absb, d, box, resolution);
  if (b.radial && b.kind == Kind::mollified) {
    const double R = b.param("radius"), rend = R + 12.0 * b.eps;
    if (detail::ball_inside(box, rend, d)) {
      std::vector<double> br{R};
      for (double k = 1; k <= 64; k *= 2) br.push_back(k * b.eps);
      return std::pow(detail::radial_integral([&](double r) { return std::pow(std::abs(b.radial(r)), p); }, d, rend, br, 0.0),
                      1.0 / p);
    }
  }
  return std::pow(detail::box_integral([&](const double* x) { return std::pow(absb(x), p); }, d, box, resolution),
                  1.0 / p);
}

// ‖b‖_{L^p_x L^q_t} over box × [0,T]; q = ∞ takes the essential sup in time.
inline double lpq_norm(const DriftField& b, double p, double q, double T, const Box& box, std::size_t resolution = 32) {
  detail::check_exponents(p, q);
  return detail::time_factor(q, T) * lp_norm(b, p, box, resolution);
}

// ‖a - b‖_{L^p_x L^q_t}. Two radial fields with a common support radius use the radial
// integral with the singular endpoint at 0.
inline double lpq_distance(const DriftField& a, const DriftField& b, double p, double q, double T, const Box& box,
                           std::size_t resolution = 32) {
  detail::check_exponents(p, q);
  if (a.d != b.d) throw std::invalid_argument("lpq_distance: dimension mismatch");
  const std::size_t d = a.d;
  const double tf = detail::time_factor(q, T);
  if (a.radial && b.radial && !std::isinf(p)) {
    const double R = a.param("radius");
    const double rend = R + 12.0 * std::max(a.eps, b.eps);
    if (b.param("radius") == R && detail::ball_inside(box, rend, d)) {
      double sing = 0.0;
      for (const auto* f : {&a, &b})
        if (f->kind == Kind::singular_power) sing = std::min(sing, -f->param("gamma") * p);
      if (sing <= -static_cast<double>(d)) throw InfiniteNormError("lpq_distance: singular field not in L^p");
      std::vector<double> br{R};
      for (double e : {a.eps, b.eps})
        if (e > 0)
          for (double k = 0.25; k <= 64; k *= 2) br.push_back(k * e), br.push_back(R - k * e), br.push_back(R + k * e);
      auto h = [&](double r) { return std::pow(std::abs(a.radial(r) - b.radial(r)), p); };
      return tf * std::pow(detail::radial_integral(h, d, rend, br, sing), 1.0 / p);
    }
  }
  std::vector<double> ya(d), yb(d);
  auto diff = [&](const double* x) {
    a.eval(0.0, x, ya.data());
    b.eval(0.0, x, yb.data());
    for (std::size_t i = 0; i < d; ++i) ya[i] -= yb[i];
    return detail::norm2(ya.data(), d);
  };
  if (std::isinf(p)) return tf * detail::box_sup(diff, d, box, resolution);
  return tf * std::pow(detail::box_integral([&](const double* x) { return std::pow(diff(x), p); }, d, box, resolution),
                       1.0 / p);
}

}  // namespace fracsde::drift
