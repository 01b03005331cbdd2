#pragma once

#include <boost/math/special_functions/beta.hpp>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "fracsde/core/quadrature.hpp"
#include "fracsde/core/stats.hpp"
#include "fracsde/drift/field.hpp"
#include "fracsde/fbm/ensemble.hpp"
#include "fracsde/frac/grid_function.hpp"
#include "fracsde/frac/operators.hpp"
#include "fracsde/io/executor.hpp"

namespace fracsde::girsanov {

struct CoupledGeneratorRequired : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double max_excluded_fraction = 1e-3;

// Lower-triangular A with v_i = Σ_{j<i} A(i,j)·b(t_j, B_{t_j}).
struct VWeights {
  double H = 0.3;
  double dt = 0.0;
  std::size_t n = 0;
  std::vector<double> a;  // row i holds entries j = 0..i-1 at offset i(i-1)/2

  const double* row(std::size_t i) const { return a.data() + i * (i - 1) / 2; }
};

// ∫_j^{j+1} (i-u)^{-1/2-H} u^{1/2-H} du for 0 <= j < i. Cells touching or next to an
// endpoint singularity use the regularized incomplete beta; the rest Gauss-Legendre.
inline double cell_weight(std::size_t i, std::size_t j, double H) {
  namespace bm = boost::math;
  if (j >= 2 && j + 3 <= i) {
    static const auto rule = quad::gauss_legendre(10);
    const double fi = static_cast<double>(i);
    double s = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double u = static_cast<double>(j) + 0.5 * (rule.nodes[k] + 1.0);
      s += rule.weights[k] * std::pow(fi - u, -0.5 - H) * std::pow(u, 0.5 - H);
    }
    return 0.5 * s;
  }
  const double a = 1.5 - H, b = 0.5 - H;
  const double x0 = static_cast<double>(j) / static_cast<double>(i);
  const double x1 = static_cast<double>(j + 1) / static_cast<double>(i);
  const double mass = x0 >= 0.5 ? bm::ibetac(a, b, x0) - (x1 >= 1.0 ? 0.0 : bm::ibetac(a, b, x1))
                                : bm::ibeta(a, b, x1) - bm::ibeta(a, b, x0);
  return std::pow(static_cast<double>(i), 1.0 - 2.0 * H) * bm::beta(a, b) * mass;
}

inline std::shared_ptr<const VWeights> v_weights(double H, double dt, std::size_t n) {
  static std::mutex mu;
  static std::map<std::tuple<double, double, std::size_t>, std::shared_ptr<const VWeights>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{H, dt, n}];
  if (slot) return slot;
  auto w = std::make_shared<VWeights>();
  w->H = H;
  w->dt = dt;
  w->n = n;
  w->a.assign(n * (n + 1) / 2, 0.0);
  const double c = 1.0 / (frac::operator_constant(H) * std::tgamma(0.5 - H));
  for (std::size_t i = 1; i <= n; ++i) {
    const double si = static_cast<double>(i) * dt;
    const double pre = c * std::pow(si, H - 0.5) * std::pow(dt, 1.0 - 2.0 * H);
    double* r = w->a.data() + i * (i - 1) / 2;
    for (std::size_t j = 0; j < i; ++j) r[j] = pre * cell_weight(i, j, H);
  }
  slot = w;
  return slot;
}

namespace detail {

inline void require_coupled(const fbm::FbmEnsemble& e) {
  if (!e.has_dW() || e.generator != fbm::Generator::volterra)
    throw CoupledGeneratorRequired("girsanov: ensemble must come from the volterra generator (dW required)");
  frac::detail::require_rough(e.grid.H, "girsanov");
}

// v at every node of path p; drift values are taken at the left node of each cell.
inline void v_path(const fbm::FbmEnsemble& e, std::size_t p, const drift::DriftField& b, const VWeights& w,
                   std::vector<double>& drift_vals, double* v) {
  const std::size_t n = e.grid.n_steps, d = e.d;
  drift_vals.resize(n * d);
  for (std::size_t j = 0; j < n; ++j) b.eval(e.grid.time(j), &e.B[(p * (n + 1) + j) * d], &drift_vals[j * d]);
  for (std::size_t c = 0; c < d; ++c) v[c] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double* r = w.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < i; ++j) s += r[j] * drift_vals[j * d + c];
      v[i * d + c] = s;
    }
  }
}

}  // namespace detail

// v_s = K_H⁻¹(∫_0^· b(r, B_r) dr)(s) per path, in the explicit singular-integral form.
inline std::vector<frac::GridFunction> drift_to_v(const fbm::FbmEnsemble& e, const drift::DriftField& b,
                                                  const io::Executor& ex = io::serial()) {
  detail::require_coupled(e);
  const auto w = v_weights(e.grid.H, e.grid.dt(), e.grid.n_steps);
  std::vector<frac::GridFunction> out(e.n_paths, frac::GridFunction::zeros(e.grid.dt(), e.grid.n_steps, e.d));
  ex.for_each(e.n_paths, [&](std::size_t p) {
    std::vector<double> buf;
    detail::v_path(e, p, b, *w, buf, out[p].v.data());
  });
  return out;
}

struct GirsanovRecord {
  std::vector<double> ito_sum;
  std::vector<double> qv_sum;
  std::vector<double> xi;
  std::vector<std::uint8_t> flagged;
  std::size_t excluded = 0;
  std::optional<std::vector<frac::GridFunction>> v;
  // ito partial sums at requested checkpoint nodes, n_paths × checkpoints
  std::vector<std::size_t> checkpoint_nodes;
  std::vector<double> ito_at;
  std::vector<double> qv_at;

  std::size_t n_paths() const { return xi.size(); }
};

struct WeightOptions {
  bool keep_v = false;
  std::vector<std::size_t> checkpoint_nodes;
};

// Left-point Itô and quadratic-variation sums and ξ_T = exp(-ito - qv/2).
inline GirsanovRecord girsanov_weight(const fbm::FbmEnsemble& e, const drift::DriftField& b, const WeightOptions& opt = {},
                                      const io::Executor& ex = io::serial()) {
  detail::require_coupled(e);
  const std::size_t n = e.grid.n_steps, d = e.d, np = e.n_paths, nc = opt.checkpoint_nodes.size();
  for (auto k : opt.checkpoint_nodes)
    if (k > n) throw std::invalid_argument("girsanov_weight: checkpoint beyond the grid");
  const double dt = e.grid.dt();
  const auto w = v_weights(e.grid.H, dt, n);
  GirsanovRecord r;
  r.ito_sum.assign(np, 0.0);
  r.qv_sum.assign(np, 0.0);
  r.xi.assign(np, 0.0);
  r.flagged.assign(np, 0);
  r.checkpoint_nodes = opt.checkpoint_nodes;
  r.ito_at.assign(np * nc, 0.0);
  r.qv_at.assign(np * nc, 0.0);
  if (opt.keep_v) r.v.emplace(np, frac::GridFunction::zeros(dt, n, d));
  ex.for_each(np, [&](std::size_t p) {
    std::vector<double> buf, vloc((n + 1) * d);
    double* v = opt.keep_v ? (*r.v)[p].v.data() : vloc.data();
    detail::v_path(e, p, b, *w, buf, v);
    std::vector<double> ito_prefix(n + 1, 0.0), qv_prefix(n + 1, 0.0);
    stats::Neumaier ito, qv;
    bool finite = true;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t c = 0; c < d; ++c) {
        const double vj = v[j * d + c];
        finite = finite && std::isfinite(vj);
        ito.add(vj * e.dw(p, j, c));
        qv.add(vj * vj * dt);
      }
      ito_prefix[j + 1] = ito.value();
      qv_prefix[j + 1] = qv.value();
    }
    for (std::size_t k = 0; k < nc; ++k) {
      r.ito_at[p * nc + k] = ito_prefix[opt.checkpoint_nodes[k]];
      r.qv_at[p * nc + k] = qv_prefix[opt.checkpoint_nodes[k]];
    }
    r.ito_sum[p] = ito.value();
    r.qv_sum[p] = qv.value();
    r.xi[p] = std::exp(-r.ito_sum[p] - 0.5 * r.qv_sum[p]);
    r.flagged[p] = !(finite && std::isfinite(r.xi[p]) && r.xi[p] > 0.0);
  });
  for (auto f : r.flagged) r.excluded += f;
  if (static_cast<double>(r.excluded) > max_excluded_fraction * static_cast<double>(np))
    throw NumericError("girsanov_weight: " + std::to_string(r.excluded) + " of " + std::to_string(np) +
                       " paths have non-finite v (exclusion limit 0.1%)");
  return r;
}

enum class Mode { weight, inverse_weight };

// Σ w_i f_i / N over unflagged paths, w = ξ_T or ξ_T⁻¹.
inline stats::MeanSe reweighted_expectation(const GirsanovRecord& r, std::span<const double> values, Mode mode) {
  if (values.size() != r.n_paths()) throw std::invalid_argument("reweighted_expectation: one value per path required");
  std::vector<double> z;
  z.reserve(values.size());
  for (std::size_t p = 0; p < values.size(); ++p) {
    if (r.flagged[p]) continue;
    const double wgt = mode == Mode::weight ? r.xi[p] : 1.0 / r.xi[p];
    z.push_back(wgt * values[p]);
  }
  return stats::mean_se(z);
}

// B̃_{t_i} = B_{t_i} + Σ_{j<i} b(t_j, B_{t_j}) dt for one path, row-major (node, component).
inline std::vector<double> shifted_path(const fbm::FbmEnsemble& e, std::size_t p, const drift::DriftField& b) {
  const std::size_t n = e.grid.n_steps, d = e.d;
  const double dt = e.grid.dt();
  std::vector<double> out(e.path_B(p).begin(), e.path_B(p).end()), drift(d), acc(d, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    b.eval(e.grid.time(j), &e.B[(p * (n + 1) + j) * d], drift.data());
    for (std::size_t c = 0; c < d; ++c) {
      acc[c] += drift[c] * dt;
      out[(j + 1) * d + c] += acc[c];
    }
  }
  return out;
}

struct KazamakiReport {
  std::vector<double> times;
  std::vector<stats::MeanSe> estimates;  // E exp(-½ M_t)
  double sup = 0.0;
  double half_sup = 0.0;  // same sup on the first half of the paths
  double stability_ratio = 1.0;
  bool stable = true;
};

// E exp(-½ ∫_0^t v dW) at each checkpoint, with a 50%-subsample stability ratio.
inline KazamakiReport kazamaki_diagnostic(const GirsanovRecord& r, const fbm::HurstGrid& g) {
  KazamakiReport k;
  const std::size_t nc = r.checkpoint_nodes.size(), np = r.n_paths();
  if (nc == 0) throw std::invalid_argument("kazamaki_diagnostic: record carries no checkpoints");
  for (std::size_t c = 0; c < nc; ++c) {
    std::vector<double> z;
    z.reserve(np);
    for (std::size_t p = 0; p < np; ++p)
      if (!r.flagged[p]) z.push_back(std::exp(-0.5 * r.ito_at[p * nc + c]));
    k.times.push_back(g.time(r.checkpoint_nodes[c]));
    k.estimates.push_back(stats::mean_se(z));
    k.sup = std::max(k.sup, k.estimates.back().mean);
    const std::span<const double> half(z.data(), std::max<std::size_t>(1, z.size() / 2));
    k.half_sup = std::max(k.half_sup, stats::mean_se(half).mean);
  }
  k.stability_ratio = k.half_sup / k.sup;
  k.stable = std::abs(k.stability_ratio - 1.0) <= 0.05;
  return k;
}

inline KazamakiReport kazamaki_diagnostic(const fbm::FbmEnsemble& e, const drift::DriftField& b,
                                          const std::vector<double>& t_checkpoints,
                                          const io::Executor& ex = io::serial()) {
  WeightOptions opt;
  for (double t : t_checkpoints) opt.checkpoint_nodes.push_back(e.grid.snap(t));
  return kazamaki_diagnostic(girsanov_weight(e, b, opt, ex), e.grid);
}

struct EnergyScaling {
  std::vector<double> amplitudes;
  std::vector<stats::MeanSe> energies;  // E ∫|v_s|² ds
  double exponent = 0.0;                // fitted power of the amplitude
};

// E∫|v|²ds for each amplitude of a drift family; quadratic scaling is the checkable content.
inline EnergyScaling energy_scaling(const fbm::FbmEnsemble& e, const std::function<drift::DriftField(double)>& family,
                                    const std::vector<double>& amplitudes, const io::Executor& ex = io::serial()) {
  if (amplitudes.size() < 2) throw std::invalid_argument("energy_scaling: need two amplitudes");
  EnergyScaling s;
  s.amplitudes = amplitudes;
  std::vector<double> la, le;
  for (double a : amplitudes) {
    const auto r = girsanov_weight(e, family(a), {}, ex);
    std::vector<double> q;
    for (std::size_t p = 0; p < r.n_paths(); ++p)
      if (!r.flagged[p]) q.push_back(r.qv_sum[p]);
    s.energies.push_back(stats::mean_se(q));
    la.push_back(std::abs(a));
    le.push_back(s.energies.back().mean);
  }
  s.exponent = stats::loglog_slope(la, le);
  return s;
}

struct WeightConvergence {
  std::vector<double> levels;
  std::vector<stats::MeanSe> l1;   // E|Ξ^k - Ξ^{k+1}|
  std::vector<stats::MeanSe> l2sq; // E|Ξ^k - Ξ^{k+1}|²
  std::vector<double> l2;          // sqrt of l2sq
  double mean_l2_ratio = 0.0;      // geometric mean of l2[k]/l2[k+1]
  std::size_t excluded_paths = 0;
};

// Weights for each mollification level on the same ensemble, compared level to level.
inline WeightConvergence weight_convergence_study(const fbm::FbmEnsemble& e, const drift::DriftField& b,
                                                  const std::vector<double>& levels,
                                                  const io::Executor& ex = io::serial()) {
  WeightConvergence w;
  w.levels = levels;
  std::vector<GirsanovRecord> recs;
  for (double eps : levels) {
    recs.push_back(girsanov_weight(e, b.is_singular() || eps > 0.0 ? drift::mollify(b, eps) : b, {}, ex));
    w.excluded_paths = std::max(w.excluded_paths, recs.back().excluded);
  }
  for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
    std::vector<double> a1, a2;
    for (std::size_t p = 0; p < e.n_paths; ++p) {
      if (recs[k].flagged[p] || recs[k + 1].flagged[p]) continue;
      const double z = recs[k].xi[p] - recs[k + 1].xi[p];
      a1.push_back(std::abs(z));
      a2.push_back(z * z);
    }
    w.l1.push_back(stats::mean_se(a1));
    w.l2sq.push_back(stats::mean_se(a2));
    w.l2.push_back(std::sqrt(w.l2sq.back().mean));
  }
  if (w.l2.size() >= 2) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < w.l2.size(); ++k) s += std::log(w.l2[k] / w.l2[k + 1]);
    w.mean_l2_ratio = std::exp(s / static_cast<double>(w.l2.size() - 1));
  }
  return w;
}

inline nlohmann::ordered_json summary_json(const GirsanovRecord& r, const std::optional<KazamakiReport>& k = std::nullopt) {
  std::vector<double> xi;
  for (std::size_t p = 0; p < r.n_paths(); ++p)
    if (!r.flagged[p]) xi.push_back(r.xi[p]);
  const auto m = stats::mean_se(xi);
  nlohmann::ordered_json j;
  j["n_paths"] = r.n_paths();
  j["excluded_paths"] = r.excluded;
  j["mean_xi"] = m.mean;
  j["se_xi"] = m.se;
  if (k) {
    j["kazamaki_sup"] = k->sup;
    j["stability_ratio"] = k->stability_ratio;
    j["kazamaki_stable"] = k->stable;
    auto& cps = j["kazamaki_checkpoints"] = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < k->times.size(); ++c)
      cps.push_back({{"t", k->times[c]}, {"estimate", k->estimates[c].mean}, {"se", k->estimates[c].se}});
  } else {
    j["kazamaki_sup"] = nullptr;
    j["stability_ratio"] = nullptr;
  }
  return j;
}

inline void write_csv(std::ostream& os, const GirsanovRecord& r, std::uint64_t first_path = 0) {
  os << "path_id,ito_sum,qv_sum,xi\n";
  os.precision(17);
  for (std::size_t p = 0; p < r.n_paths(); ++p)
    os << first_path + p << ',' << r.ito_sum[p] << ',' << r.qv_sum[p] << ',' << r.xi[p] << '\n';
}

}  // namespace fracsde::girsanov
