#pragma once

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "fracsde/core/rng.hpp"
#include "fracsde/fbm/ensemble.hpp"
#include "fracsde/fbm/kernel.hpp"
#include "fracsde/io/executor.hpp"

namespace fracsde::fbm {

namespace detail {

using GridKey = std::tuple<double, double, std::size_t>;

inline void check_request(std::size_t d, std::size_t n_paths) {
  if (d == 0) throw std::domain_error("fbm sampler: dimension must be positive");
  if (n_paths == 0) throw std::domain_error("fbm sampler: n_paths must be positive");
}

inline FbmEnsemble empty_ensemble(const HurstGrid& g, std::size_t d, std::size_t n_paths, std::uint64_t seed,
                                  std::uint64_t first_path, Generator gen) {
  FbmEnsemble e;
  e.grid = g;
  e.d = d;
  e.n_paths = n_paths;
  e.seed = seed;
  e.first_path = first_path;
  e.generator = gen;
  e.B.assign(n_paths * g.n_nodes() * d, 0.0);
  return e;
}

}  // namespace detail

// Lower Cholesky factor of R(t_i, t_j) over the interior nodes t_1..t_n.
inline std::shared_ptr<const Eigen::MatrixXd> cholesky_factor(const HurstGrid& g) {
  static std::mutex mu;
  static std::map<detail::GridKey, std::shared_ptr<const Eigen::MatrixXd>> cache;
  const detail::GridKey key{g.H, g.T, g.n_steps};
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const auto n = static_cast<Eigen::Index>(g.n_steps);
  Eigen::MatrixXd R(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) R(i, j) = covariance(g.time(i + 1), g.time(j + 1), g.H);
  Eigen::LLT<Eigen::MatrixXd> llt(R);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-12 * R.diagonal().maxCoeff();
    R.diagonal().array() += jitter;
    llt.compute(R);
    if (llt.info() != Eigen::Success) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R, Eigen::EigenvaluesOnly);
      const auto ev = es.eigenvalues();
      throw std::runtime_error("cholesky_factor: factorization failed after jitter; condition estimate " +
                               std::to_string(ev.maxCoeff() / ev.minCoeff()));
    }
  }
  auto L = std::make_shared<const Eigen::MatrixXd>(llt.matrixL());
  std::lock_guard lock(mu);
  cache.emplace(key, L);
  return L;
}

inline FbmEnsemble sample_cholesky(const HurstGrid& g, std::size_t d, std::size_t n_paths, std::uint64_t seed,
                                   std::uint64_t first_path = 0, const io::Executor& ex = io::serial()) {
  detail::check_request(d, n_paths);
  const auto L = cholesky_factor(g);
  auto e = detail::empty_ensemble(g, d, n_paths, seed, first_path, Generator::cholesky);
  const std::size_t n = g.n_steps;
  ex.for_each(n_paths, [&](std::size_t p) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(n));
    for (std::size_t c = 0; c < d; ++c) {
      rng::Substream rs(seed, first_path + p, rng::tag::noise + static_cast<std::uint32_t>(c));
      for (std::size_t i = 0; i < n; ++i) z(static_cast<Eigen::Index>(i)) = rs.normal();
      const Eigen::VectorXd x = L->triangularView<Eigen::Lower>() * z;
      for (std::size_t i = 0; i < n; ++i) e.b(p, i + 1, c) = x(static_cast<Eigen::Index>(i));
    }
  });
  return e;
}

// Packed lower-triangular table: row i (1..n) holds κ_{i,1..i} at offset i(i-1)/2,
// κ_ij = (1/dt) ∫_{t_{j-1}}^{t_j} K(t_i, s) ds, so E[B_{t_i} | ΔW] = Σ_j κ_ij ΔW_j.
// `residual` is the lower Cholesky factor of Cov(B | ΔW) = R - dt κκ^T (empty at H = 1/2).
struct VolterraWeights {
  HurstGrid grid;
  std::vector<double> kappa;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> residual;
  double at(std::size_t i, std::size_t j) const { return kappa[i * (i - 1) / 2 + (j - 1)]; }
  const double* row(std::size_t i) const { return kappa.data() + i * (i - 1) / 2; }
};

inline std::shared_ptr<const VolterraWeights> volterra_weights(const HurstGrid& g) {
  static std::mutex mu;
  static std::map<detail::GridKey, std::shared_ptr<const VolterraWeights>> cache;
  const detail::GridKey key{g.H, g.T, g.n_steps};
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto w = std::make_shared<VolterraWeights>();
  w->grid = g;
  const std::size_t n = g.n_steps;
  w->kappa.resize(n * (n + 1) / 2);
  const double dt = g.dt();
  // K(λt, λs) = λ^{H-1/2} K(t,s): integrate on the unit-step grid and rescale.
  const double scale = std::pow(dt, g.H - 0.5);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= i; ++j)
      w->kappa[i * (i - 1) / 2 + (j - 1)] =
          scale * kernel_cell_integral(static_cast<double>(i), static_cast<double>(j - 1), static_cast<double>(j), g.H,
                                       {1e-11, 1e-9, 400});
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(N, N), c(N, N);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= i; ++j) k(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1)) = w->at(i, j);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j) c(i, j) = covariance(g.time(i + 1), g.time(j + 1), g.H);
  c.noalias() -= dt * k * k.transpose();
  if (c.diagonal().maxCoeff() > 1e-12 * std::pow(g.T, 2.0 * g.H)) {
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) {
      c.diagonal().array() += 1e-12 * c.diagonal().maxCoeff();
      llt.compute(c);
      if (llt.info() != Eigen::Success) throw std::runtime_error("volterra_weights: conditional covariance not positive");
    }
    w->residual = llt.matrixL();
  }
  std::shared_ptr<const VolterraWeights> cw = w;
  std::lock_guard lock(mu);
  cache.emplace(key, cw);
  return cw;
}

inline FbmEnsemble sample_volterra(const HurstGrid& g, std::size_t d, std::size_t n_paths, std::uint64_t seed,
                                   std::uint64_t first_path = 0, const io::Executor& ex = io::serial()) {
  detail::check_request(d, n_paths);
  const auto w = volterra_weights(g);
  auto e = detail::empty_ensemble(g, d, n_paths, seed, first_path, Generator::volterra);
  const std::size_t n = g.n_steps;
  e.dW.assign(n_paths * n * d, 0.0);
  const double sdt = std::sqrt(g.dt());
  ex.for_each(n_paths, [&](std::size_t p) {
    std::vector<double> dw(n), z(n);
    for (std::size_t c = 0; c < d; ++c) {
      rng::Substream rs(seed, first_path + p, rng::tag::noise + static_cast<std::uint32_t>(c));
      for (std::size_t j = 0; j < n; ++j) {
        dw[j] = sdt * rs.normal();
        e.dw(p, j, c) = dw[j];
      }
      for (std::size_t i = 1; i <= n; ++i) {
        const double* k = w->row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < i; ++j) acc += k[j] * dw[j];
        e.b(p, i, c) = acc;
      }
      if (w->residual.size() == 0) continue;
      rng::Substream zs(seed, first_path + p, rng::tag::subcell + static_cast<std::uint32_t>(c));
      for (std::size_t j = 0; j < n; ++j) z[j] = zs.normal();
      for (std::size_t i = 0; i < n; ++i) {
        const double* r = w->residual.data() + i * n;
        double acc = 0.0;
        for (std::size_t j = 0; j <= i; ++j) acc += r[j] * z[j];
        e.b(p, i + 1, c) += acc;
      }
    }
  });
  return e;
}

// Autocovariance of fractional Gaussian noise with step dt at lag k.
inline double fgn_autocov(std::size_t k, double dt, double H) {
  const double h2 = 2.0 * H;
  const double kk = static_cast<double>(k);
  return 0.5 * std::pow(dt, h2) *
         (std::pow(kk + 1.0, h2) - 2.0 * std::pow(kk, h2) + std::pow(std::abs(kk - 1.0), h2));
}

// Eigenvalues of the circulant embedding of size 2n.
inline std::vector<double> circulant_eigenvalues(const HurstGrid& g) {
  const std::size_t n = g.n_steps, m = 2 * n;
  std::vector<std::complex<double>> c(m), lam(m);
  for (std::size_t k = 0; k < m; ++k) c[k] = fgn_autocov(std::min(k, m - k), g.dt(), g.H);
  static std::mutex plan_mu;
  fftw_plan plan;
  {
    std::lock_guard lock(plan_mu);
    plan = fftw_plan_dft_1d(static_cast<int>(m), reinterpret_cast<fftw_complex*>(c.data()),
                            reinterpret_cast<fftw_complex*>(lam.data()), FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(plan_mu);
    fftw_destroy_plan(plan);
  }
  std::vector<double> out(m);
  bool clipped = false;
  for (std::size_t k = 0; k < m; ++k) {
    double v = lam[k].real();
    if (v < -1e-10) throw std::runtime_error("circulant embedding: negative eigenvalue " + std::to_string(v));
    if (v < 0.0) v = 0.0, clipped = true;
    out[k] = v;
  }
  if (clipped) std::clog << "warning: circulant embedding clipped small negative eigenvalues\n";
  return out;
}

// Davies-Harte: exact fGn from the circulant embedding, then cumulative sums.
inline FbmEnsemble sample_fgn_circulant(const HurstGrid& g, std::size_t d, std::size_t n_paths, std::uint64_t seed,
                                        std::uint64_t first_path = 0, const io::Executor& ex = io::serial()) {
  detail::check_request(d, n_paths);
  const std::size_t n = g.n_steps, m = 2 * n;
  const auto lam = circulant_eigenvalues(g);
  std::vector<double> amp(m);
  for (std::size_t k = 0; k < m; ++k) amp[k] = std::sqrt(lam[k] / static_cast<double>(m));
  auto e = detail::empty_ensemble(g, d, n_paths, seed, first_path, Generator::fgn_circulant);

  static std::mutex plan_mu;
  auto* probe_in = fftw_alloc_complex(m);
  auto* probe_out = fftw_alloc_complex(m);
  fftw_plan plan;
  {
    std::lock_guard lock(plan_mu);
    plan = fftw_plan_dft_1d(static_cast<int>(m), probe_in, probe_out, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  ex.for_each(n_paths, [&](std::size_t p) {
    auto* in = fftw_alloc_complex(m);
    auto* out = fftw_alloc_complex(m);
    for (std::size_t c = 0; c < d; ++c) {
      rng::Substream rs(seed, first_path + p, rng::tag::noise + static_cast<std::uint32_t>(c));
      for (std::size_t k = 0; k < m; ++k) {
        in[k][0] = amp[k] * rs.normal();
        in[k][1] = amp[k] * rs.normal();
      }
      fftw_execute_dft(plan, in, out);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += out[i][0];
        e.b(p, i + 1, c) = acc;
      }
    }
    fftw_free(in);
    fftw_free(out);
  });
  {
    std::lock_guard lock(plan_mu);
    fftw_destroy_plan(plan);
  }
  fftw_free(probe_in);
  fftw_free(probe_out);
  return e;
}

inline FbmEnsemble sample(Generator gen, const HurstGrid& g, std::size_t d, std::size_t n_paths, std::uint64_t seed,
                          std::uint64_t first_path = 0, const io::Executor& ex = io::serial()) {
  switch (gen) {
    case Generator::cholesky: return sample_cholesky(g, d, n_paths, seed, first_path, ex);
    case Generator::volterra: return sample_volterra(g, d, n_paths, seed, first_path, ex);
    case Generator::fgn_circulant: return sample_fgn_circulant(g, d, n_paths, seed, first_path, ex);
  }
  throw std::invalid_argument("sample: unknown generator");
}

}  // namespace fracsde::fbm
