#pragma once

#include <boost/math/special_functions/beta.hpp>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fracsde/core/quadrature.hpp"
#include "fracsde/core/rng.hpp"
#include "fracsde/core/stats.hpp"
#include "fracsde/fbm/kernel.hpp"
#include "fracsde/verify/result.hpp"

namespace fracsde::verify {

// ---------------------------------------------------------------- simplex integral

inline double simplex_closed_form(const std::vector<double>& alpha, double s0, double s_end) {
  double sum = 0.0, lg = 0.0;
  for (double a : alpha) sum += a, lg += std::lgamma(a);
  return std::pow(s_end - s0, sum) * std::exp(lg - std::lgamma(sum + 1.0));
}

struct SimplexResult {
  double numeric = 0.0;
  double closed_form = 0.0;
  double abs_error = 0.0;
  double standard_error = 0.0;  // zero for the quadrature path
  bool monte_carlo = false;
};

// ∫_{s0<s1<...<sm<s_end} ∏ (s_j - s_{j-1})^{α_j - 1} ds.
inline SimplexResult simplex_integral(const std::vector<double>& alpha, double s0, double s_end,
                                      std::size_t mc_samples = 1000000, std::uint64_t seed = 1) {
  const std::size_t m = alpha.size();
  if (m == 0 || m > 4) throw std::domain_error("simplex_integral: 1 <= m <= 4");
  for (double a : alpha)
    if (!(a > 0.0)) throw std::domain_error("simplex_integral: exponents must be positive");
  if (!(s_end > s0)) throw std::domain_error("simplex_integral: need s0 < s_end");
  SimplexResult r;
  r.closed_form = simplex_closed_form(alpha, s0, s_end);
  const quad::QuadSpec spec{1e-15, 1e-13, 4000};
  if (m == 1) {
    auto f = [&](double, double da, double) { return std::pow(da, alpha[0] - 1.0); };
    r.numeric = quad::integrate_left_power(f, s0, s_end, std::min(alpha[0] - 1.0, 0.0), spec).value;
  } else if (m == 2) {
    auto outer = [&](double s2, double, double) {
      auto inner = [&](double, double da, double db) { return std::pow(da, alpha[0] - 1.0) * std::pow(db, alpha[1] - 1.0); };
      return quad::integrate_two_sided(inner, s0, s2, std::min(alpha[0] - 1.0, 0.0), std::min(alpha[1] - 1.0, 0.0), spec)
          .value;
    };
    r.numeric = quad::integrate_left_power(outer, s0, s_end, std::min(alpha[0] + alpha[1] - 1.0, 0.0), spec).value;
  } else {
    r.monte_carlo = true;
    const double L = s_end - s0;
    std::vector<double> vals(mc_samples);
    double fact = 1.0;
    for (std::size_t k = 2; k <= m; ++k) fact *= static_cast<double>(k);
    for (std::size_t i = 0; i < mc_samples; ++i) {
      rng::Substream g(seed, i, rng::tag::aux);
      double u[4];
      for (std::size_t k = 0; k < m; ++k) u[k] = g.uniform();
      std::sort(u, u + m);
      double prod = 1.0, prev = 0.0;
      for (std::size_t k = 0; k < m; ++k) prod *= std::pow(L * (u[k] - prev), alpha[k] - 1.0), prev = u[k];
      vals[i] = prod;
    }
    const auto ms = stats::mean_se(vals);
    const double vol = std::pow(L, static_cast<double>(m)) / fact;
    r.numeric = vol * ms.mean;
    r.standard_error = vol * ms.se;
  }
  r.abs_error = std::abs(r.numeric - r.closed_form);
  return r;
}

inline CheckResult check_simplex_identity(const std::vector<double>& alpha, double s0, double s_end,
                                          std::size_t mc_samples = 1000000, std::uint64_t seed = 1,
                                          double quad_tol = 1e-6, double mc_se = 3.0) {
  Stopwatch sw;
  CheckResult c;
  c.check_name = "simplex_identity";
  const auto r = simplex_integral(alpha, s0, s_end, mc_samples, seed);
  c.implied_constant = r.numeric / r.closed_form;
  c.worst_point = alpha;
  c.details = {{"numeric", r.numeric}, {"closed_form", r.closed_form}, {"abs_error", r.abs_error},
               {"standard_error", r.standard_error}, {"monte_carlo", r.monte_carlo}};
  if (r.monte_carlo) {
    c.tolerances = {{"standard_errors", mc_se}};
    c.verdict = r.abs_error <= mc_se * r.standard_error ? Verdict::pass : Verdict::fail;
  } else {
    c.tolerances = {{"abs", quad_tol}};
    c.verdict = r.abs_error <= quad_tol ? Verdict::pass : Verdict::fail;
  }
  c.runtime = sw.seconds();
  return c;
}

// ---------------------------------------------------------------- taming bound

// ∫_s^t r^{-β}(t-r)^α dr: incomplete beta when β < 1, adaptive quadrature otherwise.
inline double taming_integral(double alpha, double beta, double s, double t) {
  if (!(0.0 < s && s < t)) throw std::domain_error("taming_integral: need 0 < s < t");
  if (!(alpha > -1.0)) throw std::domain_error("taming_integral: need alpha > -1");
  if (beta < 1.0) {
    const double a = 1.0 - beta, b = alpha + 1.0, x = s / t;
    return std::pow(t, 1.0 + alpha - beta) * boost::math::beta(a, b) * boost::math::ibetac(a, b, x);
  }
  auto f = [&](double r, double, double db) { return std::pow(r, -beta) * std::pow(db, alpha); };
  return quad::integrate_right_power(f, s, t, std::min(alpha, 0.0), {1e-15, 1e-12, 4000}).value;
}

// ∫_0^s (t-r)^{-β} r^α dr by direct quadrature.
inline double mirrored_direct(double alpha, double beta, double s, double t) {
  auto f = [&](double, double da, double db) { return std::pow(t - s + db, -beta) * std::pow(da, alpha); };
  return quad::integrate_left_power(f, 0.0, s, std::min(alpha, 0.0), {1e-16, 1e-13, 4000}).value;
}

// The same through u = t - r, as a taming integral over [t-s, t].
inline double mirrored_substituted(double alpha, double beta, double s, double t) {
  return taming_integral(alpha, beta, t - s, t);
}

namespace detail {

// Points of (0,1) clustered geometrically at both ends down to delta.
inline std::vector<double> two_sided_lattice(double delta, std::size_t per_decade) {
  std::vector<double> u;
  const double decades = -std::log10(delta);
  const auto n = static_cast<std::size_t>(std::ceil(decades * static_cast<double>(per_decade)));
  for (std::size_t k = 0; k <= n; ++k) {
    const double v = std::pow(10.0, -decades * static_cast<double>(k) / static_cast<double>(n)) * 0.5;
    u.push_back(v);
    u.push_back(1.0 - v);
  }
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

}  // namespace detail

struct TamingRequest {
  double alpha = -0.5, beta = 0.3, gamma = 0.3;
  double eps = 0.01;  // used only when alpha >= 0
  double t = 1.0;
  double s_min = 1e-4;
  double growth_tol = 0.05;
};

inline double taming_bound(const TamingRequest& q, double s) {
  const double shift = q.alpha >= 0.0 ? q.eps : 0.0;
  return std::pow(s, -q.beta + q.gamma) * std::pow(q.t - s, q.alpha + 1.0 - q.gamma - shift);
}

// sup_s integral/bound over s ∈ [s_min, t); bounded when a further decade toward both ends
// changes the sup by at most growth_tol.
inline CheckResult check_taming_bound(const TamingRequest& q) {
  Stopwatch sw;
  if (!(q.beta > 0.0 && q.gamma > 0.0 && q.gamma <= std::min(q.beta, 1.0) && q.gamma < q.alpha + 1.0))
    throw std::domain_error("check_taming_bound: need beta > 0, 0 < gamma <= min(beta,1), gamma < alpha+1");
  CheckResult c;
  c.check_name = "taming_bound";
  auto sup_over = [&](double delta, double& witness) {
    double best = 0.0;
    for (double u : detail::two_sided_lattice(delta, 8)) {
      const double s = u * q.t;
      const double ratio = taming_integral(q.alpha, q.beta, s, q.t) / taming_bound(q, s);
      if (ratio > best) best = ratio, witness = s;
    }
    return best;
  };
  double w = 0.0, w2 = 0.0;
  const double sup = sup_over(q.s_min / q.t, w);
  const double sup_ext = sup_over(q.s_min / q.t / 10.0, w2);
  const double growth = sup_ext / sup - 1.0;
  c.implied_constant = sup;
  c.worst_point = {w, q.t};
  c.tolerances = {{"growth", q.growth_tol}};
  // mirror-form check at a few s
  double mirror_err = 0.0;
  for (double u : {0.01, 0.2, 0.5, 0.9, 0.999}) {
    const double s = u * q.t;
    mirror_err = std::max(mirror_err, std::abs(mirrored_direct(q.alpha, q.beta, s, q.t) -
                                               mirrored_substituted(q.alpha, q.beta, s, q.t)));
  }
  c.details = {{"sup_extended", sup_ext}, {"growth", growth}, {"mirror_abs_error", mirror_err}};
  c.tolerances["mirror_abs"] = 1e-8;
  c.verdict = !std::isfinite(sup) ? Verdict::fail
              : mirror_err > 1e-8 ? Verdict::fail
              : growth <= q.growth_tol ? Verdict::pass
                                       : Verdict::unstable;
  c.runtime = sw.seconds();
  return c;
}

// ---------------------------------------------------------------- kernel bounds

struct KernelBoundsRequest {
  double H = 0.3;
  double T = 1.0;
  double gamma = -1.0;      // increment exponent; default 0.9H
  double two_beta = 0.1;    // double-integral exponent 2β
  double delta = 1e-4;      // closest approach to the lattice ends, as a fraction of t
  std::vector<std::size_t> refinements{32, 64, 128, 256};
  double growth_tol = 0.05;
  double refine_tol = 0.02;
};

// ∫_0^t∫_0^t |K(t,s2) - K(t,s1)| / |s2 - s1|^{1+2β} on a graded grid with N cells.
inline double kernel_double_integral(double H, double t, double two_beta, std::size_t N) {
  static const auto rule = quad::gauss_legendre(4);
  std::vector<double> edges(N + 1);
  for (std::size_t k = 0; k <= N; ++k) {
    const double x = static_cast<double>(k) / static_cast<double>(N);
    edges[k] = t * x * x * (3.0 - 2.0 * x);
  }
  const std::size_t q = rule.nodes.size();
  std::vector<double> node(N * q), weight(N * q), kval(N * q);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < q; ++k) {
      const double a = edges[i], b = edges[i + 1];
      node[i * q + k] = a + 0.5 * (b - a) * (rule.nodes[k] + 1.0);
      weight[i * q + k] = 0.5 * (b - a) * rule.weights[k];
      kval[i * q + k] = fbm::kernel_K(t, node[i * q + k], H);
    }
  const double e = 1.0 + two_beta;
  stats::Neumaier acc;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      if (i == j) {
        // |ΔK| ≈ |∂_s K(mid)|·|Δs| on the diagonal cell; ∫∫|Δs|^{-2β} in closed form.
        const double a = edges[i], b = edges[i + 1], L = b - a, m = 0.5 * (a + b), h = 1e-4 * L;
        const double dk = (fbm::kernel_K(t, m + h, H) - fbm::kernel_K(t, m - h, H)) / (2.0 * h);
        acc.add(std::abs(dk) * 2.0 * std::pow(L, 2.0 - two_beta) / ((1.0 - two_beta) * (2.0 - two_beta)));
        continue;
      }
      double s = 0.0;
      for (std::size_t k = 0; k < q; ++k)
        for (std::size_t l = 0; l < q; ++l) {
          const std::size_t u = i * q + k, v = j * q + l;
          s += weight[u] * weight[v] * std::abs(kval[u] - kval[v]) / std::pow(std::abs(node[u] - node[v]), e);
        }
      acc.add(s);
    }
  }
  return acc.value();
}

inline CheckResult check_kernel_bounds(KernelBoundsRequest q) {
  Stopwatch sw;
  if (!(q.H > 0.0 && q.H <= 0.5)) throw std::domain_error("check_kernel_bounds: H must lie in (0, 1/2]");
  if (q.gamma < 0.0) q.gamma = 0.9 * q.H;
  CheckResult c;
  c.check_name = "kernel_bounds";
  const double H = q.H;
  const std::vector<double> t_values{0.25 * q.T, 0.5 * q.T, 0.75 * q.T, 0.99 * q.T};

  struct Sup {
    double value = 0.0;
    std::vector<double> at;
  };
  auto point_sup = [&](double delta) {
    Sup s;
    for (double t : t_values)
      for (double u : detail::two_sided_lattice(delta, 6)) {
        const double x = u * t;
        const double ratio = fbm::kernel_K(t, x, H) / (std::pow(x, H - 0.5) * std::pow(t - x, H - 0.5));
        if (ratio > s.value) s.value = ratio, s.at = {x, t};
      }
    return s;
  };
  auto incr_sup = [&](double delta) {
    Sup s;
    const auto lat = detail::two_sided_lattice(delta, 4);
    for (double t : t_values)
      for (std::size_t a = 0; a < lat.size(); ++a)
        for (std::size_t b = a + 1; b < lat.size(); ++b) {
          const double s1 = lat[a] * t, s2 = lat[b] * t;
          const double num = std::abs(fbm::kernel_K(t, s2, H) - fbm::kernel_K(t, s1, H));
          const double den = std::pow((s2 - s1) / (s1 * s2), q.gamma) * std::pow(s2, H - 0.5 - q.gamma) *
                             std::pow(t - s2, H - 0.5 - q.gamma);
          const double ratio = num / den;
          if (ratio > s.value) s.value = ratio, s.at = {s1, s2, t};
        }
    return s;
  };
  const auto p1 = point_sup(q.delta), p1x = point_sup(q.delta / 10.0);
  const auto p2 = incr_sup(q.delta), p2x = incr_sup(q.delta / 10.0);
  auto growth = [](double base, double ext) { return base > 0.0 ? ext / base - 1.0 : (ext > 0.0 ? HUGE_VAL : 0.0); };
  const double g1 = growth(p1.value, p1x.value), g2 = growth(p2.value, p2x.value);

  std::vector<double> estimates;
  for (auto N : q.refinements) estimates.push_back(kernel_double_integral(H, q.T, q.two_beta, N));
  double last_change = 0.0;
  if (estimates.size() >= 2 && estimates.back() != 0.0)
    last_change = std::abs(estimates.back() - estimates[estimates.size() - 2]) / std::abs(estimates.back());

  c.implied_constant = std::max(p1.value, p2.value);
  c.worst_point = p1.value >= p2.value ? p1.at : p2.at;
  c.tolerances = {{"growth", q.growth_tol}, {"refinement", q.refine_tol}};
  c.details = {{"kernel_ratio_sup", p1.value}, {"kernel_ratio_witness", p1.at}, {"kernel_ratio_growth", g1},
               {"increment_gamma", q.gamma},   {"increment_ratio_sup", p2.value}, {"increment_witness", p2.at},
               {"increment_growth", g2},       {"double_integral_two_beta", q.two_beta},
               {"double_integral_estimates", estimates}, {"double_integral_last_change", last_change}};
  const bool finite = std::isfinite(c.implied_constant) && std::isfinite(estimates.back());
  c.verdict = !finite ? Verdict::fail
              : (g1 <= q.growth_tol && g2 <= q.growth_tol && last_change <= q.refine_tol) ? Verdict::pass
                                                                                         : Verdict::unstable;
  c.runtime = sw.seconds();
  return c;
}

// ---------------------------------------------------------------- shuffle identity

namespace detail {

// Chebyshev interpolant on [a,b] built from values at the first-kind points.
class Chebyshev {
 public:
  Chebyshev(std::function<double(double)> f, double a, double b, std::size_t n) : a_(a), b_(b), c_(n, 0.0) {
    std::vector<double> fx(n);
    for (std::size_t j = 0; j < n; ++j) fx[j] = f(map(std::cos(std::numbers::pi * (j + 0.5) / n)));
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += fx[j] * std::cos(std::numbers::pi * k * (j + 0.5) / n);
      c_[k] = 2.0 * s / static_cast<double>(n);
    }
    c_[0] *= 0.5;
  }

  double operator()(double x) const {
    const double y = (2.0 * x - a_ - b_) / (b_ - a_);
    double b1 = 0.0, b2 = 0.0;
    for (std::size_t k = c_.size(); k-- > 1;) {
      const double t = 2.0 * y * b1 - b2 + c_[k];
      b2 = b1;
      b1 = t;
    }
    return y * b1 - b2 + c_[0];
  }

  // Antiderivative vanishing at a.
  Chebyshev integral() const {
    const std::size_t n = c_.size();
    Chebyshev out(*this);
    std::vector<double> c(n + 2, 0.0), C(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) c[k] = c_[k];
    c[0] *= 2.0;
    for (std::size_t k = 1; k <= n; ++k) C[k] = (c[k - 1] - c[k + 1]) / (2.0 * static_cast<double>(k));
    double at_a = 0.0;
    for (std::size_t k = 1; k <= n; ++k) at_a += (k % 2 ? -1.0 : 1.0) * C[k];
    C[0] = -at_a;
    const double half = 0.5 * (b_ - a_);
    out.c_.assign(n + 1, 0.0);
    for (std::size_t k = 0; k <= n; ++k) out.c_[k] = half * C[k];
    return out;
  }

 private:
  double map(double y) const { return 0.5 * (a_ + b_) + 0.5 * (b_ - a_) * y; }
  double a_, b_;
  std::vector<double> c_;
};

}  // namespace detail

using ScalarFn = std::function<double(double)>;

// ∫_{θ<s1<...<sk<t} ∏ f_{w_j}(s_j) by repeated Chebyshev antiderivatives.
inline double iterated_integral_chebyshev(const std::vector<ScalarFn>& fs, const std::vector<int>& word, double theta,
                                          double t, std::size_t degree = 64) {
  ScalarFn acc = [](double) { return 1.0; };
  std::vector<std::shared_ptr<detail::Chebyshev>> keep;
  for (int w : word) {
    const auto& f = fs.at(static_cast<std::size_t>(w));
    auto prev = acc;
    detail::Chebyshev g([&f, prev](double s) { return f(s) * prev(s); }, theta, t, degree);
    auto ip = std::make_shared<detail::Chebyshev>(g.integral());
    keep.push_back(ip);
    acc = [ip](double s) { return (*ip)(s); };
  }
  return acc(t);
}

// ∫_{Δ^m_{θ,t}} ∏ f_j(s_j) by nested adaptive quadrature (m <= 2).
inline double iterated_integral_direct(const std::vector<ScalarFn>& f, double theta, double t) {
  const quad::QuadSpec spec{1e-15, 1e-13, 2000};
  if (f.size() == 1) return quad::integrate(f[0], theta, t, spec).value;
  if (f.size() == 2) {
    auto outer = [&](double s2) { return f[1](s2) * quad::integrate(f[0], theta, s2, spec).value; };
    return quad::integrate(outer, theta, t, spec).value;
  }
  throw std::domain_error("iterated_integral_direct: m <= 2");
}

// All interleavings of r copies of (0,...,m-1) keeping each copy's order.
inline std::vector<std::vector<int>> shuffles(std::size_t m, std::size_t r) {
  std::vector<std::vector<int>> out;
  std::vector<std::size_t> pos(r, 0);
  std::vector<int> cur;
  std::function<void()> rec = [&] {
    if (cur.size() == m * r) {
      out.push_back(cur);
      return;
    }
    for (std::size_t c = 0; c < r; ++c) {
      if (pos[c] == m) continue;
      cur.push_back(static_cast<int>(pos[c]));
      ++pos[c];
      rec();
      --pos[c];
      cur.pop_back();
    }
  };
  rec();
  return out;
}

struct ShuffleResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double error = 0.0;
  std::size_t terms = 0;
};

// (∫_{Δ^m} ∏ f_j)^r against the sum of iterated integrals over all shuffles of r copies.
inline ShuffleResult shuffle_identity(const std::vector<ScalarFn>& word, double theta, double t, std::size_t r) {
  const std::size_t m = word.size();
  if (m < 1 || m > 2 || r < 2 || r > 3) throw std::domain_error("shuffle_identity: m ∈ {1,2}, r ∈ {2,3}");
  ShuffleResult s;
  s.lhs = std::pow(iterated_integral_direct(word, theta, t), static_cast<double>(r));
  std::map<std::vector<int>, double> cache;
  stats::Neumaier acc;
  for (const auto& w : shuffles(m, r)) {
    auto it = cache.find(w);
    if (it == cache.end()) it = cache.emplace(w, iterated_integral_chebyshev(word, w, theta, t)).first;
    acc.add(it->second);
    ++s.terms;
  }
  s.rhs = acc.value();
  s.error = std::abs(s.lhs - s.rhs);
  return s;
}

inline CheckResult check_shuffle_identity(const ScalarFn& f, double theta, double t, std::size_t r, std::size_t m,
                                          double tol = 1e-8) {
  Stopwatch sw;
  CheckResult c;
  c.check_name = "shuffle_identity";
  const auto s = shuffle_identity(std::vector<ScalarFn>(m, f), theta, t, r);
  c.implied_constant = s.rhs / s.lhs;
  c.worst_point = {theta, t, static_cast<double>(r), static_cast<double>(m)};
  c.tolerances = {{"abs", tol}};
  c.details = {{"lhs", s.lhs}, {"rhs", s.rhs}, {"error", s.error}, {"terms", s.terms}};
  c.verdict = s.error <= tol ? Verdict::pass : Verdict::fail;
  c.runtime = sw.seconds();
  return c;
}

}  // namespace fracsde::verify
