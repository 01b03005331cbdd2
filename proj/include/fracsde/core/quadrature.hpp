#pragma once

#include <Eigen/Dense>
#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fracsde::quad {

struct QuadSpec {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_intervals = 2000;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

namespace detail {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
using G7 = boost::math::quadrature::gauss<double, 7>;

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b) {
  const auto& xk = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G7::weights();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  std::array<double, 15> fv;
  fv[0] = f(c);
  for (std::size_t i = 1; i < xk.size(); ++i) {
    fv[2 * i - 1] = f(c - h * xk[i]);
    fv[2 * i] = f(c + h * xk[i]);
  }
  double kron = wk[0] * fv[0], gauss = wg[0] * fv[0], resabs = wk[0] * std::abs(fv[0]);
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double fsum = fv[2 * i - 1] + fv[2 * i];
    kron += wk[i] * fsum;
    resabs += wk[i] * (std::abs(fv[2 * i - 1]) + std::abs(fv[2 * i]));
    if (i % 2 == 0) gauss += wg[i / 2] * fsum;
  }
  const double mean = 0.5 * kron;
  double resasc = wk[0] * std::abs(fv[0] - mean);
  for (std::size_t i = 1; i < xk.size(); ++i)
    resasc += wk[i] * (std::abs(fv[2 * i - 1] - mean) + std::abs(fv[2 * i] - mean));
  const double ah = std::abs(h);
  double err = std::abs((kron - gauss) * h);
  resasc *= ah;
  resabs *= ah;
  // QUADPACK's error scaling for the 7/15 pair.
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
  return {a, b, kron * h, err};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod (7/15): bisect the worst segment until the summed
// error estimate meets max(abs_tol, rel_tol·|I|) or the interval budget is spent.
template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadSpec& spec = {}) {
  if (a == b) return {};
  if (b < a) {
    auto r = integrate(f, b, a, spec);
    return {-r.value, r.error};
  }
  std::priority_queue<detail::Segment> heap;
  heap.push(detail::gk15(f, a, b));
  double value = heap.top().value, error = heap.top().error;
  int count = 1;
  while (error > std::max(spec.abs_tol, spec.rel_tol * std::abs(value)) && count < spec.max_intervals) {
    const auto worst = heap.top();
    const double m = 0.5 * (worst.a + worst.b);
    if (!(m > worst.a && m < worst.b)) break;
    heap.pop();
    const auto l = detail::gk15(f, worst.a, m);
    const auto r = detail::gk15(f, m, worst.b);
    value += l.value + r.value - worst.value;
    error += l.error + r.error - worst.error;
    heap.push(l);
    heap.push(r);
    ++count;
  }
  double v = 0.0, e = 0.0, comp = 0.0;
  while (!heap.empty()) {
    const double x = heap.top().value;
    const double t = v + x;
    comp += std::abs(v) >= std::abs(x) ? (v - t) + x : (x - t) + v;
    v = t;
    e += heap.top().error;
    heap.pop();
  }
  return {v + comp, e};
}

// Endpoint-singular helpers. The integrand is called as f(x, da, db) with
// da = x - a and db = b - x supplied exactly, so power factors near an endpoint keep
// full relative precision.

// ∫_a^b f with f ~ (x-a)^e near a (e > -1). With x = a + u^{m/(1+e)} the power factor
// becomes the monomial u^{m-1}; m is the smallest integer making m/(1+e) >= 3 so the
// regular part of f stays C^3 in u.
template <class F>
QuadResult integrate_left_power(F&& f, double a, double b, double e, const QuadSpec& spec = {}) {
  if (!(e > -1.0)) throw std::domain_error("integrate_left_power: exponent must exceed -1");
  const double m = std::max(1.0, std::ceil(3.0 * (1.0 + e) - 1e-12));
  const double k = m / (1.0 + e);
  const double len = b - a;
  auto g = [&](double u) {
    if (u <= 0.0) return 0.0;
    const double r = std::pow(u, k);
    return f(a + r, r, len - r) * k * r / u;
  };
  return integrate(g, 0.0, std::pow(len, 1.0 / k), spec);
}

// ∫_a^b f with f ~ (b-x)^e near b.
template <class F>
QuadResult integrate_right_power(F&& f, double a, double b, double e, const QuadSpec& spec = {}) {
  auto g = [&](double, double r, double rest) { return f(b - r, rest, r); };
  return integrate_left_power(g, a, b, e, spec);
}

// ∫_a^b f with power singularities of exponents ea at a and eb at b.
template <class F>
QuadResult integrate_two_sided(F&& f, double a, double b, double ea, double eb, const QuadSpec& spec = {}) {
  const double m = 0.5 * (a + b), half = 0.5 * (b - a);
  auto fl = [&](double x, double da, double dm) { return f(x, da, half + dm); };
  auto fr = [&](double x, double dm, double db) { return f(x, half + dm, db); };
  const auto l = integrate_left_power(fl, a, m, ea, spec);
  const auto r = integrate_right_power(fr, m, b, eb, spec);
  return {l.value + r.value, l.error + r.error};
}

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Golub-Welsch for Gauss-Legendre on [-1,1].
inline Rule gauss_legendre(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule r;
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(es.eigenvalues()(i));
    r.weights.push_back(2.0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
  }
  return r;
}

// Golub-Welsch for probabilists' Gauss-Hermite: ∫ f(z) φ(z) dz with φ the standard normal density.
inline Rule gauss_hermite_prob(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) J(i, i - 1) = J(i - 1, i) = std::sqrt(static_cast<double>(i));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule r;
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(es.eigenvalues()(i));
    r.weights.push_back(es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
  }
  return r;
}

}  // namespace fracsde::quad
