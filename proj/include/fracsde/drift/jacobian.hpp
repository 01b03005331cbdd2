#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "fracsde/core/stats.hpp"
#include "fracsde/drift/euler.hpp"
#include "fracsde/drift/field.hpp"
#include "fracsde/fbm/ensemble.hpp"
#include "fracsde/frac/grid_function.hpp"
#include "fracsde/frac/operators.hpp"
#include "fracsde/io/executor.hpp"

namespace fracsde::drift {

using Mat = Eigen::MatrixXd;

// J_{θ,t} along one solution path for nodes t >= θ, together with the order-3 truncation
// of its iterated-integral (Picard) expansion and a majorant of the truncation error.
struct JacobianSlice {
  std::size_t theta_node = 0;
  std::size_t d = 1;
  std::vector<Mat> J;           // J[k] = J_{θ, t_{θ+k}}
  std::vector<Mat> picard;      // I + Σ_{m=1}^{3} discrete iterated sums
  std::vector<double> tail;     // e^Λ - Σ_{m<=3} Λ^m/m!, Λ = Σ ‖∇b·dt‖_F
};

namespace detail {

inline Mat grad_at(const DriftField& b, double t, const double* x, std::size_t d) {
  Mat A(d, d);
  std::vector<double> buf(d * d);
  b.grad(t, x, buf.data());
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) A(i, j) = buf[i * d + j];
  return A;
}

inline double exp_tail(double L, int order) {
  double partial = 0.0, term = 1.0;
  for (int m = 0; m <= order; ++m) {
    partial += term;
    term *= L / (m + 1);
  }
  // e^L - partial, summed directly to avoid cancellation for small L.
  double tail = 0.0;
  for (int m = order + 1; m < order + 200 && term > 1e-300; ++m) {
    tail += term;
    term *= L / (m + 1);
  }
  return tail;
}

}  // namespace detail

// path: n_nodes × d states on a grid of step dt (node i at time i·dt).
inline JacobianSlice jacobian_ode(const double* path, std::size_t n_nodes, std::size_t d, double dt, const DriftField& b,
                                  std::size_t theta_node) {
  if (!b.has_grad()) throw std::invalid_argument("jacobian_ode: drift gradient unavailable");
  if (theta_node >= n_nodes) throw std::invalid_argument("jacobian_ode: theta beyond the grid");
  JacobianSlice s;
  s.theta_node = theta_node;
  s.d = d;
  const Mat I = Mat::Identity(d, d);
  std::vector<Mat> S{I, Mat::Zero(d, d), Mat::Zero(d, d), Mat::Zero(d, d)};
  Mat J = I;
  double lambda = 0.0;
  s.J.push_back(J);
  s.picard.push_back(I);
  s.tail.push_back(0.0);
  for (std::size_t i = theta_node; i + 1 < n_nodes; ++i) {
    const Mat A = detail::grad_at(b, static_cast<double>(i) * dt, path + i * d, d) * dt;
    J = J + A * J;
    for (int m = 3; m >= 1; --m) S[m] = S[m] + A * S[m - 1];
    lambda += A.norm();
    s.J.push_back(J);
    s.picard.push_back(S[0] + S[1] + S[2] + S[3]);
    s.tail.push_back(detail::exp_tail(lambda, 3));
  }
  return s;
}

// Off-grid θ is snapped to the nearest node with a warning.
inline JacobianSlice jacobian_ode(const double* path, std::size_t n_nodes, std::size_t d, double dt, const DriftField& b,
                                  double theta) {
  const double pos = theta / dt;
  const auto node = static_cast<std::size_t>(std::max(0.0, std::round(pos)));
  if (std::abs(pos - std::round(pos)) > 1e-9) std::clog << "warning: theta " << theta << " snapped to grid node " << node << '\n';
  return jacobian_ode(path, n_nodes, d, dt, b, std::min(node, n_nodes - 1));
}

// θ ↦ Dᴴ_θ X_t = J_{θ,t} for θ <= t and 0 beyond, as a grid function with d·d
// components (row-major), via J_{θ,t} = J_{θ+1,t}(I + ∇b(X_θ)dt).
inline frac::GridFunction jacobian_in_theta(const double* path, std::size_t n_nodes, std::size_t d, double dt,
                                            const DriftField& b, std::size_t t_node) {
  if (!b.has_grad()) throw std::invalid_argument("jacobian_in_theta: drift gradient unavailable");
  auto g = frac::GridFunction::zeros(dt, n_nodes - 1, d * d);
  Mat J = Mat::Identity(d, d);
  const Mat I = Mat::Identity(d, d);
  for (std::size_t th = t_node + 1; th-- > 0;) {
    if (th < t_node) J = J * (I + detail::grad_at(b, static_cast<double>(th) * dt, path + th * d, d) * dt);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) g(th, i * d + j) = J(i, j);
  }
  return g;
}

// D_θ X_t = K_H^*(Dᴴ_· X_t)(θ), entrywise in θ.
inline frac::GridFunction malliavin_transfer(const frac::GridFunction& dh, double H, double T) {
  return frac::transfer_KHstar(dh, H, T);
}

// [X(B + ε·1_{[θ,·]} e_dir) - X(B)]/ε at every node, for one path.
inline std::vector<double> bump_derivative(const fbm::FbmEnsemble& e, std::size_t p, const DriftField& b,
                                           const std::vector<double>& x0, std::size_t theta_node, double eps,
                                           std::size_t dir) {
  fbm::FbmEnsemble one;
  one.grid = e.grid;
  one.d = e.d;
  one.n_paths = 1;
  one.B.assign(e.path_B(p).begin(), e.path_B(p).end());
  const std::size_t nn = e.grid.n_nodes(), d = e.d;
  std::vector<double> base(nn * d), bumped(nn * d);
  euler_path(one, 0, b, 0, x0.data(), 1, base.data());
  for (std::size_t i = theta_node; i < nn; ++i) one.b(0, i, dir) += eps;
  euler_path(one, 0, b, 0, x0.data(), 1, bumped.data());
  for (std::size_t k = 0; k < base.size(); ++k) bumped[k] = (bumped[k] - base[k]) / eps;
  return bumped;
}

// β at the quarter point of the admissible range used for the Besov-type term.
inline double compactness_beta(double H, int d, double p, double q) {
  const double ip = std::isinf(p) ? 0.0 : 1.0 / p, iq = std::isinf(q) ? 0.0 : 1.0 / q;
  return 0.25 * std::min(1.0 - H * d * ip - 2.0 * iq, 2.0 - 2.0 * H - H * d * ip - 2.0 * iq);
}

struct CompactnessTriple {
  stats::MeanSe second_moment;      // E‖F‖², F = X_T
  stats::MeanSe derivative_energy;  // E ∫_0^T ‖D_θ F‖² dθ
  stats::MeanSe besov;              // E ∫∫ ‖D_θF - D_θ'F‖² / |θ-θ'|^{1+2β}
};

// Monte Carlo estimates of the three compactness quantities for F = X_T.
inline CompactnessTriple compactness_quantities(const fbm::FbmEnsemble& e, const DriftField& b,
                                                const std::vector<double>& x0, double beta,
                                                const io::Executor& ex = io::serial()) {
  const auto sol = euler_solve(e, b, x0, 1, ex);
  const std::size_t n = e.grid.n_steps, d = e.d, dd = d * d;
  const double H = e.grid.H, T = e.grid.T, dt = e.grid.dt();
  std::vector<double> m2(e.n_paths), en(e.n_paths), bv(e.n_paths);
  std::vector<double> wpow(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) wpow[k] = std::pow(static_cast<double>(k) * dt, -1.0 - 2.0 * beta) * dt * dt;
  ex.for_each(e.n_paths, [&](std::size_t p) {
    const double* path = sol.path(p);
    double f2 = 0.0;
    for (std::size_t c = 0; c < d; ++c) f2 += path[n * d + c] * path[n * d + c];
    m2[p] = f2;
    const auto dh = jacobian_in_theta(path, n + 1, d, dt, b, n);
    const auto D = malliavin_transfer(dh, H, T);
    double energy = 0.0;
    for (std::size_t c = 0; c < dd; ++c) energy += frac::weighted_l2_inner(D, D, H, c);
    en[p] = energy;
    double acc = 0.0;
    for (std::size_t i = 1; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        double diff = 0.0;
        for (std::size_t c = 0; c < dd; ++c) {
          const double z = D(i, c) - D(j, c);
          diff += z * z;
        }
        acc += 2.0 * diff * wpow[j - i];
      }
    bv[p] = acc;
  });
  return {stats::mean_se(m2), stats::mean_se(en), stats::mean_se(bv)};
}

}  // namespace fracsde::drift
