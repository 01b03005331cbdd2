#pragma once

#include <algorithm>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracsde/core/quadrature.hpp"

namespace fracsde::drift {

enum class Kind { analytic, singular_power, peano, mollified };

inline std::string to_string(Kind k) {
  switch (k) {
    case Kind::analytic: return "analytic";
    case Kind::singular_power: return "singular_power";
    case Kind::peano: return "peano";
    case Kind::mollified: return "mollified";
  }
  return "unknown";
}

// Cube [lo, hi]^d used for norm computations.
struct Box {
  double lo = -1.0;
  double hi = 1.0;
};

// Declarative drift description: a preset name plus named parameters.
//   zero
//   constant        c
//   linear          lambda          b(x) = -lambda x
//   gaussian_bump   amplitude width b_i(x) = amplitude exp(-|x|^2 / width^2)
//   sine            amplitude frequency  b_i(x) = amplitude sin(frequency x_i)
//   singular_power  gamma radius    b(x) = |x|^{-gamma} 1_{|x|<=radius} u, u = (1,..,1)/sqrt(d)
//   peano           alpha           b_i(x) = sign(x_i)|x_i|^alpha
struct DriftSpec {
  std::string kind = "zero";
  std::map<std::string, double> params;
};

inline const std::map<std::string, std::map<std::string, double>>& preset_defaults() {
  static const std::map<std::string, std::map<std::string, double>> defaults{
      {"zero", {}},
      {"constant", {{"c", 1.0}}},
      {"linear", {{"lambda", 1.0}}},
      {"gaussian_bump", {{"amplitude", 0.5}, {"width", 1.0}}},
      {"sine", {{"amplitude", 1.0}, {"frequency", 1.0}}},
      {"singular_power", {{"gamma", 0.3}, {"radius", 1.0}}},
      {"peano", {{"alpha", 0.5}}},
  };
  return defaults;
}

// Tabulated scalar profile on [0, x_max] with cubic Hermite interpolation.
struct HermiteTable {
  double h = 0.0;
  std::vector<double> f, df;

  double x_max() const { return h * static_cast<double>(f.size() - 1); }

  double eval(double x, double* deriv = nullptr) const {
    const double pos = x / h;
    std::size_t k = static_cast<std::size_t>(pos);
    if (k >= f.size() - 1) k = f.size() - 2;
    const double s = pos - static_cast<double>(k);
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    if (deriv) {
      const double d00 = (6 * s2 - 6 * s) / h, d10 = 3 * s2 - 4 * s + 1, d01 = (-6 * s2 + 6 * s) / h, d11 = 3 * s2 - 2 * s;
      *deriv = d00 * f[k] + d10 * df[k] + d01 * f[k + 1] + d11 * df[k + 1];
    }
    return h00 * f[k] + h10 * h * df[k] + h01 * f[k + 1] + h11 * h * df[k + 1];
  }
};

class DriftField {
 public:
  using EvalFn = std::function<void(double, const double*, double*)>;

  Kind kind = Kind::analytic;
  std::string preset = "zero";
  std::size_t d = 1;
  std::map<std::string, double> params;
  Box box;
  double eps = 0.0;

  // Present for singular_power and its mollification: b(x) = radial(|x|)·u.
  std::function<double(double)> radial;

  bool has_grad() const { return static_cast<bool>(grad_); }
  bool is_singular() const { return kind == Kind::singular_power || kind == Kind::peano; }

  void eval(double t, const double* x, double* out) const { eval_(t, x, out); }
  std::vector<double> eval(double t, const std::vector<double>& x) const {
    std::vector<double> out(d);
    eval_(t, x.data(), out.data());
    return out;
  }
  // Row-major d×d Jacobian, J[i*d+j] = ∂b_i/∂x_j.
  void grad(double t, const double* x, double* J) const {
    if (!grad_) throw std::logic_error("DriftField: gradient unavailable for kind " + to_string(kind));
    grad_(t, x, J);
  }
  double param(const std::string& key) const { return params.at(key); }

  EvalFn eval_;
  EvalFn grad_;
};

namespace detail {

inline double norm2(const double* x, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += x[i] * x[i];
  return std::sqrt(s);
}

inline double gauss_pdf(double z, double eps) {
  return std::exp(-0.5 * z * z / (eps * eps)) / (eps * std::sqrt(2.0 * std::numbers::pi));
}

// e^{-z} I_nu(z), z >= 0.
inline double bessel_i_scaled(int nu, double z) {
  if (z < 500.0) return boost::math::cyl_bessel_i(nu, z) * std::exp(-z);
  const double mu = 4.0 * nu * nu;
  const double a = 8.0 * z;
  return (1.0 - (mu - 1.0) / a + (mu - 1.0) * (mu - 9.0) / (2.0 * a * a) -
          (mu - 1.0) * (mu - 9.0) * (mu - 25.0) / (6.0 * a * a * a)) /
         std::sqrt(2.0 * std::numbers::pi * z);
}

inline double sign(double x) { return (x > 0.0) - (x < 0.0); }

// ∫_0^R ρ^{-γ}·kernel(ρ) with the Gaussian window of the kernel located near `centre`.
template <class F>
double integrate_profile(F&& f, double R, double centre, double eps, double sing_exp) {
  std::set<double> cuts{0.0, R};
  for (double c : {centre - 8.0 * eps, centre, centre + 8.0 * eps})
    if (c > 0.0 && c < R) cuts.insert(c);
  const std::vector<double> pts(cuts.begin(), cuts.end());
  const quad::QuadSpec spec{1e-14, 1e-11, 400};
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double a = pts[k], b = pts[k + 1];
    if (a == 0.0) {
      auto g = [&](double x, double, double) { return f(x); };
      total += quad::integrate_left_power(g, a, b, sing_exp, spec).value;
    } else {
      total += quad::integrate(f, a, b, spec).value;
    }
  }
  return total;
}

// Radial Gaussian mollification of g(r) = r^{-γ}1_{r<=R} in dimension d (1..3).
inline std::pair<double, double> mollified_radial_point(double r, double gamma, double R, double eps, std::size_t d) {
  const double e2 = eps * eps;
  if (d == 1) {
    auto fv = [&](double y) { return std::pow(y, -gamma) * (gauss_pdf(r - y, eps) + gauss_pdf(r + y, eps)); };
    auto fd = [&](double y) {
      return std::pow(y, -gamma) * (-(r - y) / e2 * gauss_pdf(r - y, eps) - (r + y) / e2 * gauss_pdf(r + y, eps));
    };
    return {integrate_profile(fv, R, r, eps, -gamma), integrate_profile(fd, R, r, eps, -gamma)};
  }
  if (d == 3) {
    if (r == 0.0) {
      auto f0 = [&](double y) { return 2.0 * std::pow(y, 2.0 - gamma) * gauss_pdf(y, eps) / e2; };
      return {integrate_profile(f0, R, 0.0, eps, 2.0 - gamma), 0.0};
    }
    auto fa = [&](double y) { return std::pow(y, 1.0 - gamma) * (gauss_pdf(r - y, eps) - gauss_pdf(r + y, eps)); };
    auto fad = [&](double y) {
      return std::pow(y, 1.0 - gamma) * (-(r - y) / e2 * gauss_pdf(r - y, eps) + (r + y) / e2 * gauss_pdf(r + y, eps));
    };
    const double A = integrate_profile(fa, R, r, eps, 1.0 - gamma);
    const double Ad = integrate_profile(fad, R, r, eps, 1.0 - gamma);
    return {A / r, Ad / r - A / (r * r)};
  }
  if (d == 2) {
    auto fv = [&](double y) {
      const double z = r * y / e2;
      return std::pow(y, 1.0 - gamma) * std::exp(-0.5 * (r - y) * (r - y) / e2) * bessel_i_scaled(0, z) / e2;
    };
    auto fd = [&](double y) {
      const double z = r * y / e2;
      return std::pow(y, 1.0 - gamma) * std::exp(-0.5 * (r - y) * (r - y) / e2) *
             (y * bessel_i_scaled(1, z) - r * bessel_i_scaled(0, z)) / (e2 * e2);
    };
    return {integrate_profile(fv, R, r, eps, 1.0 - gamma), integrate_profile(fd, R, r, eps, 1.0 - gamma)};
  }
  throw std::domain_error("mollify: radial profiles supported for d <= 3");
}

inline std::pair<double, double> mollified_peano_point(double x, double alpha, double eps) {
  const double e2 = eps * eps;
  const double top = x + 12.0 * eps;
  auto fv = [&](double y) { return std::pow(y, alpha) * (gauss_pdf(x - y, eps) - gauss_pdf(x + y, eps)); };
  auto fd = [&](double y) {
    return std::pow(y, alpha) * (-(x - y) / e2 * gauss_pdf(x - y, eps) + (x + y) / e2 * gauss_pdf(x + y, eps));
  };
  return {integrate_profile(fv, top, x, eps, alpha), integrate_profile(fd, top, x, eps, alpha)};
}

template <class F>
std::shared_ptr<const HermiteTable> tabulate(double x_max, double h, F&& point) {
  auto tab = std::make_shared<HermiteTable>();
  const std::size_t n = static_cast<std::size_t>(std::ceil(x_max / h)) + 1;
  tab->h = h;
  tab->f.resize(n);
  tab->df.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto [v, dv] = point(static_cast<double>(k) * h);
    tab->f[k] = v;
    tab->df[k] = dv;
  }
  return tab;
}

inline void require_keys(const std::string& kind, const std::map<std::string, double>& params) {
  const auto& defs = preset_defaults();
  auto it = defs.find(kind);
  if (it == defs.end()) throw std::invalid_argument("unknown drift kind '" + kind + "'");
  for (const auto& [k, v] : params)
    if (!it->second.count(k)) throw std::invalid_argument("drift kind '" + kind + "' has no parameter '" + k + "'");
}

}  // namespace detail

// Builds the field for a preset; analytic presets accept eps > 0 for their closed-form
// Gaussian mollification.
inline DriftField make_analytic(const std::string& kind, std::map<std::string, double> params, std::size_t d,
                                Box box = {}, double eps = 0.0) {
  detail::require_keys(kind, params);
  for (const auto& [k, v] : preset_defaults().at(kind)) params.try_emplace(k, v);
  DriftField f;
  f.kind = eps > 0.0 ? Kind::mollified : Kind::analytic;
  f.preset = kind;
  f.d = d;
  f.params = params;
  f.box = box;
  f.eps = eps;
  if (kind == "zero") {
    f.eval_ = [d](double, const double*, double* out) { std::fill(out, out + d, 0.0); };
    f.grad_ = [d](double, const double*, double* J) { std::fill(J, J + d * d, 0.0); };
  } else if (kind == "constant") {
    const double c = params.at("c");
    f.eval_ = [d, c](double, const double*, double* out) { std::fill(out, out + d, c); };
    f.grad_ = [d](double, const double*, double* J) { std::fill(J, J + d * d, 0.0); };
  } else if (kind == "linear") {
    const double lam = params.at("lambda");
    f.eval_ = [d, lam](double, const double* x, double* out) {
      for (std::size_t i = 0; i < d; ++i) out[i] = -lam * x[i];
    };
    f.grad_ = [d, lam](double, const double*, double* J) {
      std::fill(J, J + d * d, 0.0);
      for (std::size_t i = 0; i < d; ++i) J[i * d + i] = -lam;
    };
  } else if (kind == "gaussian_bump") {
    const double w = params.at("width");
    const double w2 = w * w + 2.0 * eps * eps;
    const double a = params.at("amplitude") * std::pow(w * w / w2, 0.5 * static_cast<double>(d));
    f.eval_ = [d, a, w2](double, const double* x, double* out) {
      double r2 = 0.0;
      for (std::size_t i = 0; i < d; ++i) r2 += x[i] * x[i];
      std::fill(out, out + d, a * std::exp(-r2 / w2));
    };
    f.grad_ = [d, a, w2](double, const double* x, double* J) {
      double r2 = 0.0;
      for (std::size_t i = 0; i < d; ++i) r2 += x[i] * x[i];
      const double v = a * std::exp(-r2 / w2);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) J[i * d + j] = -2.0 * x[j] / w2 * v;
    };
  } else if (kind == "sine") {
    const double k = params.at("frequency");
    const double a = params.at("amplitude") * std::exp(-0.5 * k * k * eps * eps);
    f.eval_ = [d, a, k](double, const double* x, double* out) {
      for (std::size_t i = 0; i < d; ++i) out[i] = a * std::sin(k * x[i]);
    };
    f.grad_ = [d, a, k](double, const double* x, double* J) {
      std::fill(J, J + d * d, 0.0);
      for (std::size_t i = 0; i < d; ++i) J[i * d + i] = a * k * std::cos(k * x[i]);
    };
  } else {
    throw std::invalid_argument("make_analytic: '" + kind + "' is not an analytic preset");
  }
  return f;
}

inline DriftField make_singular_power(double gamma, double radius, std::size_t d, Box box = {}) {
  if (!(gamma > 0.0) || !(radius > 0.0)) throw std::domain_error("singular_power: gamma and radius must be positive");
  DriftField f;
  f.kind = Kind::singular_power;
  f.preset = "singular_power";
  f.d = d;
  f.params = {{"gamma", gamma}, {"radius", radius}};
  f.box = box;
  f.radial = [gamma, radius](double r) { return r <= radius ? std::pow(r, -gamma) : 0.0; };
  const double u = 1.0 / std::sqrt(static_cast<double>(d));
  f.eval_ = [d, u, g = f.radial](double, const double* x, double* out) {
    std::fill(out, out + d, u * g(detail::norm2(x, d)));
  };
  return f;
}

inline DriftField make_peano(double alpha, std::size_t d, Box box = {}) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("peano: alpha must lie in (0,1)");
  DriftField f;
  f.kind = Kind::peano;
  f.preset = "peano";
  f.d = d;
  f.params = {{"alpha", alpha}};
  f.box = box;
  f.eval_ = [d, alpha](double, const double* x, double* out) {
    for (std::size_t i = 0; i < d; ++i) out[i] = detail::sign(x[i]) * std::pow(std::abs(x[i]), alpha);
  };
  return f;
}

inline DriftField make_drift(const DriftSpec& spec, std::size_t d, Box box = {}) {
  detail::require_keys(spec.kind, spec.params);
  auto p = spec.params;
  for (const auto& [k, v] : preset_defaults().at(spec.kind)) p.try_emplace(k, v);
  if (spec.kind == "singular_power") return make_singular_power(p.at("gamma"), p.at("radius"), d, box);
  if (spec.kind == "peano") return make_peano(p.at("alpha"), d, box);
  return make_analytic(spec.kind, p, d, box);
}

// Gaussian convolution in x at scale eps. Analytic presets use closed forms; the
// singular kinds are tabulated (radial for singular_power, per-coordinate for peano)
// and interpolated by cubic Hermite with node spacing eps/16.
inline DriftField mollify(const DriftField& b, double eps) {
  if (!(eps > 0.0)) throw std::domain_error("mollify: eps must be positive");
  double e = eps;
  if (b.kind == Kind::mollified) e = std::sqrt(b.eps * b.eps + eps * eps);
  if (b.kind == Kind::analytic || (b.kind == Kind::mollified && !b.radial && b.preset != "peano"))
    return make_analytic(b.preset, b.params, b.d, b.box, e);

  DriftField f;
  f.kind = Kind::mollified;
  f.preset = b.preset;
  f.d = b.d;
  f.params = b.params;
  f.box = b.box;
  f.eps = e;
  const std::size_t d = b.d;
  const double h = e / 16.0;
  if (b.preset == "singular_power") {
    const double gamma = b.param("gamma"), R = b.param("radius");
    const double rmax = R + 12.0 * e;
    auto tab = detail::tabulate(rmax, h, [&](double r) { return detail::mollified_radial_point(r, gamma, R, e, d); });
    const double u = 1.0 / std::sqrt(static_cast<double>(d));
    const double rend = tab->x_max();
    f.radial = [tab, rend](double r) { return r >= rend ? 0.0 : tab->eval(r); };
    f.eval_ = [d, u, tab, rend](double, const double* x, double* out) {
      const double r = detail::norm2(x, d);
      std::fill(out, out + d, r >= rend ? 0.0 : u * tab->eval(r));
    };
    f.grad_ = [d, u, tab, rend](double, const double* x, double* J) {
      std::fill(J, J + d * d, 0.0);
      const double r = detail::norm2(x, d);
      if (r >= rend || r == 0.0) return;
      double g1 = 0.0;
      tab->eval(r, &g1);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) J[i * d + j] = u * g1 * x[j] / r;
    };
    return f;
  }
  if (b.preset == "peano") {
    const double alpha = b.param("alpha");
    const double xmax = std::max(8.0, 4.0 * std::max(std::abs(b.box.lo), std::abs(b.box.hi))) + 20.0 * e;
    auto tab = detail::tabulate(xmax, h, [&](double x) { return detail::mollified_peano_point(x, alpha, e); });
    const double xend = tab->x_max();
    // Beyond the table: Taylor expansion of the convolution in e^2.
    auto scalar = [tab, xend, alpha, e](double x, double* dv) {
      const double ax = std::abs(x), s = detail::sign(x);
      if (ax < xend) {
        double dd = 0.0;
        const double v = tab->eval(ax, &dd);
        if (dv) *dv = dd;
        return s * v;
      }
      const double e2 = e * e;
      const double c2 = alpha * (alpha - 1.0), c4 = c2 * (alpha - 2.0) * (alpha - 3.0);
      const double v = std::pow(ax, alpha) + 0.5 * e2 * c2 * std::pow(ax, alpha - 2.0) +
                       0.125 * e2 * e2 * c4 * std::pow(ax, alpha - 4.0);
      if (dv)
        *dv = alpha * std::pow(ax, alpha - 1.0) + 0.5 * e2 * c2 * (alpha - 2.0) * std::pow(ax, alpha - 3.0) +
              0.125 * e2 * e2 * c4 * (alpha - 4.0) * std::pow(ax, alpha - 5.0);
      return s * v;
    };
    f.eval_ = [d, scalar](double, const double* x, double* out) {
      for (std::size_t i = 0; i < d; ++i) out[i] = scalar(x[i], nullptr);
    };
    f.grad_ = [d, scalar](double, const double* x, double* J) {
      std::fill(J, J + d * d, 0.0);
      for (std::size_t i = 0; i < d; ++i) {
        double dv = 0.0;
        scalar(x[i], &dv);
        J[i * d + i] = dv;
      }
    };
    return f;
  }
  throw std::invalid_argument("mollify: unsupported base '" + b.preset + "'");
}

}  // namespace fracsde::drift
