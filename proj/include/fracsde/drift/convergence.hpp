#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracsde/core/stats.hpp"
#include "fracsde/drift/euler.hpp"
#include "fracsde/drift/field.hpp"
#include "fracsde/fbm/ensemble.hpp"
#include "fracsde/io/executor.hpp"
#include "fracsde/regimes/regimes.hpp"

namespace fracsde::drift {

struct RegimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Refuses parameter tuples outside (H1) ∧ (H2), naming the violated inequality.
inline void require_admissible(const regimes::RegimeParams& r) {
  const auto h1 = regimes::check_h1(r);
  if (!h1.ok)
    throw RegimeError("(H1) violated: 1/q + Hd/p < 1 - H fails (residual " + std::to_string(h1.residual) + ")");
  if (!regimes::check_h2(r)) {
    std::string why;
    if (!(r.p >= 2.0)) why = "p >= 2";
    else if (!(r.H * r.q >= 1.0)) why = "Hq >= 1";
    else why = "H < 1/2";
    throw RegimeError("(H2) violated: " + why + " fails");
  }
}

// E sup_i |a_i - b_i| over common nodes; b is sampled every `ratio` nodes of a when a is finer.
inline stats::MeanSe sup_distance(const SolutionPaths& a, const SolutionPaths& b) {
  const SolutionPaths& fine = a.n_nodes >= b.n_nodes ? a : b;
  const SolutionPaths& coarse = a.n_nodes >= b.n_nodes ? b : a;
  const std::size_t ratio = (fine.n_nodes - 1) / (coarse.n_nodes - 1);
  std::vector<double> v;
  v.reserve(fine.n_paths);
  for (std::size_t p = 0; p < fine.n_paths; ++p) {
    if (fine.flagged[p] || coarse.flagged[p]) continue;
    double m = 0.0;
    for (std::size_t i = 0; i < coarse.n_nodes; ++i)
      for (std::size_t c = 0; c < fine.d; ++c) m = std::max(m, std::abs(fine.x(p, i * ratio, c) - coarse.x(p, i, c)));
    v.push_back(m);
  }
  return stats::mean_se(v);
}

struct HolderTable {
  std::vector<double> lags;
  std::vector<double> moments;  // E|X_{t+lag} - X_t|²
  double slope = 0.0;
};

// Second moments of increments at dyadic lags, averaged over start nodes and paths.
inline HolderTable holder_table(const SolutionPaths& s, std::size_t max_lag_nodes = 0) {
  HolderTable h;
  const std::size_t n = s.n_nodes - 1;
  if (max_lag_nodes == 0) max_lag_nodes = std::max<std::size_t>(1, n / 8);
  for (std::size_t lag = 1; lag <= max_lag_nodes; lag *= 2) {
    stats::Neumaier acc;
    std::size_t count = 0;
    for (std::size_t p = 0; p < s.n_paths; ++p) {
      if (s.flagged[p]) continue;
      for (std::size_t i = 0; i + lag <= n; ++i) {
        double z = 0.0;
        for (std::size_t c = 0; c < s.d; ++c) {
          const double dx = s.x(p, i + lag, c) - s.x(p, i, c);
          z += dx * dx;
        }
        acc.add(z);
        ++count;
      }
    }
    h.lags.push_back(static_cast<double>(lag) * s.dt);
    h.moments.push_back(acc.value() / static_cast<double>(count));
  }
  h.slope = h.lags.size() >= 2 ? stats::loglog_slope(h.lags, h.moments) : 0.0;
  return h;
}

struct ConvergenceTable {
  std::vector<double> levels;                // mollification scales ε_k
  std::vector<stats::MeanSe> distances;      // E sup |X^{ε_k} - X^{ε_{k+1}}|
  double mollification_rate = 0.0;           // mean log2 ratio of consecutive distances
  double mean_ratio = 0.0;                   // geometric mean of consecutive distance ratios
  std::vector<double> step_sizes;            // dt of the coarser solution in each pair
  std::vector<stats::MeanSe> step_distances; // E sup |X^{(2h)} - X^{(h)}|
  double step_rate = 0.0;
  HolderTable holder;
  std::size_t excluded_paths = 0;
};

inline double mean_log2_ratio(const std::vector<stats::MeanSe>& v) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < v.size(); ++k) s += std::log2(v[k].mean / v[k + 1].mean);
  return s / static_cast<double>(v.size() - 1);
}

// Mollification and step-halving self-convergence on the common noise of `e`, plus the
// increment-moment table of the finest-level solution.
inline ConvergenceTable convergence_study(const fbm::FbmEnsemble& e, const DriftField& b, const regimes::RegimeParams& regime,
                                          const std::vector<double>& levels, std::size_t step_refinements,
                                          const std::vector<double>& x0, const io::Executor& ex = io::serial()) {
  require_admissible(regime);
  if (levels.empty()) throw std::invalid_argument("convergence_study: need at least one mollification level");
  ConvergenceTable out;
  out.levels = levels;
  std::vector<SolutionPaths> sols;
  for (double eps : levels) sols.push_back(euler_solve(e, mollify(b, eps), x0, 1, ex));
  for (std::size_t k = 0; k + 1 < sols.size(); ++k) out.distances.push_back(sup_distance(sols[k], sols[k + 1]));
  out.mollification_rate = mean_log2_ratio(out.distances);
  out.mean_ratio = std::exp2(out.mollification_rate);

  const auto finest = mollify(b, levels.back());
  std::vector<SolutionPaths> steps{sols.back()};
  for (std::size_t r = 1; r <= step_refinements; ++r) {
    const std::size_t stride = std::size_t{1} << r;
    if (e.grid.n_steps % stride != 0) break;
    steps.push_back(euler_solve(e, finest, x0, stride, ex));
  }
  // Ordered coarse to fine so the sequence should decrease.
  for (std::size_t k = steps.size(); k-- > 1;) {
    out.step_sizes.push_back(steps[k].dt);
    out.step_distances.push_back(sup_distance(steps[k], steps[k - 1]));
  }
  out.step_rate = mean_log2_ratio(out.step_distances);
  out.holder = holder_table(sols.back());
  for (const auto& s : sols) out.excluded_paths = std::max(out.excluded_paths, s.excluded());
  return out;
}

}  // namespace fracsde::drift
