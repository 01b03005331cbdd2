#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "fracsde/core/quadrature.hpp"
#include "fracsde/fbm/kernel.hpp"
#include "fracsde/verify/result.hpp"

namespace fracsde::verify {

namespace detail {

inline void require_increasing(const std::vector<double>& times) {
  if (times.empty()) throw std::domain_error("times must be non-empty");
  double prev = 0.0;
  for (double t : times) {
    if (!(t > prev)) throw std::domain_error("times must be strictly increasing and positive");
    prev = t;
  }
}

inline Eigen::MatrixXd fbm_cov(const std::vector<double>& times, double H) {
  const auto n = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd S(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) S(i, j) = fbm::covariance(times[i], times[j], H);
  return S;
}

// Centered Gaussian N(0, M) with its mixed partial derivatives of order <= 3 in distinct coordinates.
class Gaussian {
 public:
  explicit Gaussian(const Eigen::MatrixXd& M) : llt_(M), P_(llt_.solve(Eigen::MatrixXd::Identity(M.rows(), M.cols()))) {
    if (llt_.info() != Eigen::Success) throw std::runtime_error("Gaussian: covariance not positive definite");
    const Eigen::MatrixXd L = llt_.matrixL();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) logdet += 2.0 * std::log(L(i, i));
    lognorm_ = -0.5 * (static_cast<double>(M.rows()) * std::log(2.0 * std::numbers::pi) + logdet);
  }

  // ∂_{y_S} of the density at y, S a list of distinct indices with |S| <= 3.
  double derivative(const Eigen::VectorXd& y, const std::vector<int>& S) const {
    const Eigen::VectorXd a = P_ * y;
    const double f = std::exp(lognorm_ - 0.5 * y.dot(a));
    switch (S.size()) {
      case 0: return f;
      case 1: return -a(S[0]) * f;
      case 2: return (a(S[0]) * a(S[1]) - P_(S[0], S[1])) * f;
      case 3: {
        const int k = S[0], l = S[1], m = S[2];
        return -(a(k) * a(l) * a(m) - P_(k, l) * a(m) - P_(k, m) * a(l) - P_(l, m) * a(k)) * f;
      }
    }
    throw std::domain_error("Gaussian::derivative: order <= 3 supported");
  }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::MatrixXd P_;
  double lognorm_ = 0.0;
};

struct LatticeSup {
  double sup = 0.0;
  std::vector<double> witness;
};

// sup over the lattice of |∂^α p(x)| / ∏_j (t_j-t_{j-1})^{-(d+|α_j|)H} e^{-|x_j-x_{j-1}|²/(4(t_j-t_{j-1})^{2H})}.
inline LatticeSup density_ratio_sup(const std::vector<double>& times, double H, std::size_t d, double lo, double hi,
                                    std::size_t resolution, const std::vector<int>& orders) {
  const std::size_t n = times.size(), dim = n * d;
  const Gaussian g(fbm_cov(times, H));
  std::vector<int> S;
  for (std::size_t j = 0; j < n; ++j)
    if (orders[j] == 1) S.push_back(static_cast<int>(j));
  std::vector<double> gap(n), pre(n);
  double logpre = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    gap[j] = times[j] - (j ? times[j - 1] : 0.0);
    logpre += (static_cast<double>(d) + orders[j]) * H * std::log(gap[j]);
    pre[j] = 4.0 * std::pow(gap[j], 2.0 * H);
  }
  LatticeSup out;
  std::vector<std::size_t> idx(dim, 0);
  std::vector<double> x(dim);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  while (true) {
    for (std::size_t k = 0; k < dim; ++k)
      x[k] = lo + (hi - lo) * static_cast<double>(idx[k]) / static_cast<double>(resolution - 1);
    // coordinate 0 carries the derivatives; the other coordinates are independent copies
    double val = 1.0, expo = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      for (std::size_t j = 0; j < n; ++j) y(static_cast<Eigen::Index>(j)) = x[j * d + c];
      val *= c == 0 ? g.derivative(y, S) : g.derivative(y, {});
    }
    for (std::size_t j = 0; j < n; ++j) {
      double r2 = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double z = x[j * d + c] - (j ? x[(j - 1) * d + c] : 0.0);
        r2 += z * z;
      }
      expo += r2 / pre[j];
    }
    const double ratio = std::abs(val) * std::exp(logpre + expo);
    if (ratio > out.sup) out.sup = ratio, out.witness = x;
    std::size_t k = 0;
    while (k < dim && ++idx[k] == resolution) idx[k++] = 0;
    if (k == dim) break;
  }
  return out;
}

}  // namespace detail

struct DensityRequest {
  std::vector<double> times;
  double H = 0.3;
  std::size_t d = 1;
  double lo = -3.0, hi = 3.0;
  std::size_t resolution = 81;
  std::vector<int> orders;                    // |α_j| ∈ {0,1}; empty means all zero
  std::vector<double> gaps{0.1, 0.2, 0.4};    // sweep of the spacing after the first time
  double stability_tol = 0.10;
};

// Certified constant on the lattice plus stability under lattice refinement and gap changes.
inline CheckResult check_density_bound(DensityRequest q) {
  Stopwatch sw;
  detail::require_increasing(q.times);
  const std::size_t n = q.times.size();
  if (n * q.d > 3) throw std::domain_error("check_density_bound: n·d <= 3 supported");
  if (q.orders.empty()) q.orders.assign(n, 0);
  if (q.orders.size() != n) throw std::invalid_argument("check_density_bound: one order per time");
  for (int o : q.orders)
    if (o != 0 && o != 1) throw std::domain_error("check_density_bound: orders must be 0 or 1");
  if (q.resolution < 3) throw std::invalid_argument("check_density_bound: resolution >= 3");

  CheckResult r;
  r.check_name = "density_bound";
  const auto base = detail::density_ratio_sup(q.times, q.H, q.d, q.lo, q.hi, q.resolution, q.orders);
  r.implied_constant = base.sup;
  r.worst_point = base.witness;
  const auto coarse = detail::density_ratio_sup(q.times, q.H, q.d, q.lo, q.hi, (q.resolution + 1) / 2, q.orders);
  const double refine_change = std::abs(base.sup - coarse.sup) / base.sup;

  std::vector<double> consts;
  auto& sweep = r.details["gap_sweep"] = nlohmann::ordered_json::array();
  if (n >= 2) {
    for (double g : q.gaps) {
      std::vector<double> t{q.times[0]};
      for (std::size_t j = 1; j < n; ++j) t.push_back(t.back() + g);
      const auto s = detail::density_ratio_sup(t, q.H, q.d, q.lo, q.hi, q.resolution, q.orders);
      consts.push_back(s.sup);
      sweep.push_back({{"gap", g}, {"constant", s.sup}, {"witness", s.witness}});
    }
  }
  double spread = 0.0;
  if (!consts.empty()) {
    const auto [mn, mx] = std::minmax_element(consts.begin(), consts.end());
    spread = *mx / *mn - 1.0;
  }
  r.details["coarse_constant"] = coarse.sup;
  r.details["refinement_change"] = refine_change;
  r.details["gap_spread"] = spread;
  r.tolerances = {{"stability", q.stability_tol}};
  const bool finite = std::isfinite(base.sup) && base.sup > 0.0;
  r.verdict = !finite ? Verdict::fail
              : (refine_change <= q.stability_tol && spread <= q.stability_tol) ? Verdict::pass
                                                                               : Verdict::unstable;
  r.runtime = sw.seconds();
  return r;
}

// b(x) = amplitude·exp(-(x-centre)²/(2 width²)) in d = 1, entering with derivative order 0 or 1.
struct Bump {
  double amplitude = 1.0;
  double centre = 0.0;
  double width = 1.0;
  int order = 0;

  double operator()(double x) const {
    const double z = (x - centre) / width;
    const double v = amplitude * std::exp(-0.5 * z * z);
    return order == 0 ? v : -z / width * v;
  }
  double base(double x) const {
    const double z = (x - centre) / width;
    return amplitude * std::exp(-0.5 * z * z);
  }
};

inline double lp_norm(const Bump& b, double p) {
  if (std::isinf(p)) return std::abs(b.amplitude);
  return std::abs(b.amplitude) * std::pow(b.width * std::sqrt(2.0 * std::numbers::pi / p), 1.0 / p);
}

// E ∏ ∂^{α_j} b_j(B_{s_j}) in closed form: ∏ a_j√(2π)w_j · (-1)^{|α|} ∂_c^α N(c; 0, Σ + diag(w²)).
inline double product_moment_exact(const std::vector<double>& times, const std::vector<Bump>& bumps, double H) {
  detail::require_increasing(times);
  if (bumps.size() != times.size() || bumps.size() > 3) throw std::invalid_argument("product_moment: m <= 3 bumps, one per time");
  Eigen::MatrixXd M = detail::fbm_cov(times, H);
  Eigen::VectorXd c(static_cast<Eigen::Index>(bumps.size()));
  double scale = 1.0;
  std::vector<int> S;
  for (std::size_t j = 0; j < bumps.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    M(k, k) += bumps[j].width * bumps[j].width;
    c(k) = bumps[j].centre;
    scale *= bumps[j].amplitude * std::sqrt(2.0 * std::numbers::pi) * bumps[j].width;
    if (bumps[j].order == 1) {
      S.push_back(static_cast<int>(j));
      scale = -scale;
    }
  }
  return scale * detail::Gaussian(M).derivative(c, S);
}

// The same expectation by adaptive quadrature against the joint density (m <= 2).
inline double product_moment_quadrature(const std::vector<double>& times, const std::vector<Bump>& bumps, double H) {
  detail::require_increasing(times);
  const quad::QuadSpec spec{1e-14, 1e-12, 4000};
  auto cuts = [](const Bump& b, double sd) {
    std::vector<double> c{-14.0 * sd, b.centre - 10.0 * b.width, b.centre, b.centre + 10.0 * b.width, 14.0 * sd};
    std::sort(c.begin(), c.end());
    std::vector<double> out;
    for (double v : c)
      if (v >= -14.0 * sd && v <= 14.0 * sd) out.push_back(v);
    return out;
  };
  auto piecewise = [&](auto&& f, const std::vector<double>& pts) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k)
      if (pts[k + 1] > pts[k]) s += quad::integrate(f, pts[k], pts[k + 1], spec).value;
    return s;
  };
  if (bumps.size() == 1) {
    const double v = std::pow(times[0], 2.0 * H), sd = std::sqrt(v);
    auto f = [&](double x) { return bumps[0](x) * std::exp(-0.5 * x * x / v) / std::sqrt(2.0 * std::numbers::pi * v); };
    return piecewise(f, cuts(bumps[0], sd));
  }
  if (bumps.size() != 2) throw std::invalid_argument("product_moment_quadrature: m <= 2");
  const detail::Gaussian g(detail::fbm_cov(times, H));
  const double sd1 = std::pow(times[0], H), sd2 = std::pow(times[1], H);
  Eigen::VectorXd y(2);
  auto outer = [&](double x1) {
    auto inner = [&](double x2) {
      y << x1, x2;
      return bumps[1](x2) * g.derivative(y, {});
    };
    return bumps[0](x1) * piecewise(inner, cuts(bumps[1], sd2));
  };
  return piecewise(outer, cuts(bumps[0], sd1));
}

// E b'(B_s) by Gaussian integration by parts: E[b(B_s) B_s] / s^{2H}.
inline double ibp_first_moment(double s, const Bump& b, double H) {
  Bump base = b;
  base.order = 0;
  const double v = std::pow(s, 2.0 * H), sd = std::sqrt(v);
  auto f = [&](double x) { return base(x) * x * std::exp(-0.5 * x * x / v) / std::sqrt(2.0 * std::numbers::pi * v); };
  const quad::QuadSpec spec{1e-14, 1e-12, 4000};
  std::vector<double> pts{-14.0 * sd, b.centre - 10.0 * b.width, b.centre, b.centre + 10.0 * b.width, 14.0 * sd};
  std::sort(pts.begin(), pts.end());
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k)
    if (pts[k + 1] > pts[k]) acc += quad::integrate(f, pts[k], pts[k + 1], spec).value;
  return acc / v;
}

// |LHS| / ∏ ‖b_j‖_p (s_j - s_{j-1})^{-H|α_j| - Hd/p}.
inline double implied_product_constant(const std::vector<double>& times, const std::vector<Bump>& bumps, double H,
                                       double p, std::size_t d = 1) {
  const double lhs = std::abs(product_moment_exact(times, bumps, H));
  const double ip = std::isinf(p) ? 0.0 : 1.0 / p;
  double rhs = 1.0;
  for (std::size_t j = 0; j < bumps.size(); ++j) {
    const double gap = times[j] - (j ? times[j - 1] : 0.0);
    rhs *= lp_norm(bumps[j], p) * std::pow(gap, -H * bumps[j].order - H * static_cast<double>(d) * ip);
  }
  return lhs / rhs;
}

struct ProductMomentRequest {
  std::vector<double> times;
  std::vector<Bump> bumps;
  double H = 0.3;
  double p = 2.0;
  std::size_t halvings = 3;
  // Bumps rescale with the noise (width and centre ∝ λ^H when every time is scaled by λ).
  bool scale_bumps = false;
  double variation_tol = 0.25;
};

// Implied constant across halvings of every gap; its variation is the verdict.
inline CheckResult check_product_moment(const ProductMomentRequest& q) {
  Stopwatch sw;
  CheckResult r;
  r.check_name = "product_moment";
  std::vector<double> consts;
  auto& sweep = r.details["sweep"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k <= q.halvings; ++k) {
    const double lam = std::ldexp(1.0, -static_cast<int>(k));
    std::vector<double> t;
    for (double s : q.times) t.push_back(lam * s);
    auto b = q.bumps;
    if (q.scale_bumps)
      for (auto& x : b) x.width *= std::pow(lam, q.H), x.centre *= std::pow(lam, q.H);
    const double c = implied_product_constant(t, b, q.H, q.p);
    consts.push_back(c);
    sweep.push_back({{"scale", lam}, {"implied_constant", c}});
  }
  const auto [mn, mx] = std::minmax_element(consts.begin(), consts.end());
  const double variation = *mx / *mn - 1.0;
  r.implied_constant = *mx;
  r.worst_point = {q.times.front() * std::ldexp(1.0, -static_cast<int>(mx - consts.begin()))};
  r.details["variation"] = variation;
  r.tolerances = {{"variation", q.variation_tol}};
  r.verdict = std::isfinite(*mx) ? (variation < q.variation_tol ? Verdict::pass : Verdict::unstable) : Verdict::fail;
  r.runtime = sw.seconds();
  return r;
}

}  // namespace fracsde::verify
