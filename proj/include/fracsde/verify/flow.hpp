#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracsde/core/stats.hpp"
#include "fracsde/drift/euler.hpp"
#include "fracsde/drift/field.hpp"
#include "fracsde/fbm/ensemble.hpp"
#include "fracsde/io/executor.hpp"
#include "fracsde/verify/compactness.hpp"
#include "fracsde/verify/result.hpp"

namespace fracsde::verify {

// Standard Gaussian density on R^d.
inline double gaussian_weight(const std::vector<double>& x) {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  return std::exp(-0.5 * r2) / std::pow(2.0 * std::numbers::pi, 0.5 * static_cast<double>(x.size()));
}

struct SlopeTable {
  std::vector<double> lags;
  std::vector<double> moments;
  double slope = 0.0;
};

struct FlowRegularity {
  double p1 = 2.0;
  SlopeTable spatial;  // E|X^{x1}_{s,T} - X^{x2}_{s,T}|^{p1} vs |x1 - x2|
  SlopeTable time;     // E|X^x_{s,t1} - X^x_{s,t2}|^{p1} vs |t1 - t2|
  SlopeTable start;    // E|X^x_{s1,T} - X^x_{s2,T}|^{p1} vs |s1 - s2|
  double sobolev_norm = 0.0;
  std::size_t excluded_paths = 0;
};

namespace detail {

inline double dist_pow(const drift::FlowTable& f, std::size_t p, std::size_t s1, std::size_t x1, std::size_t t1,
                       std::size_t s2, std::size_t x2, std::size_t t2, double p1) {
  double z = 0.0;
  for (std::size_t c = 0; c < f.d; ++c) {
    const double u = f.at(p, s1, x1, t1, c) - f.at(p, s2, x2, t2, c);
    z += u * u;
  }
  return std::pow(z, 0.5 * p1);
}

inline double point_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double z = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) z += (a[c] - b[c]) * (a[c] - b[c]);
  return std::sqrt(z);
}

inline void finish(SlopeTable& t) { t.slope = t.lags.size() >= 2 ? stats::loglog_slope(t.lags, t.moments) : 0.0; }

}  // namespace detail

// x_points must be ordered along a line so that index distance tracks spatial distance.
inline FlowRegularity empirical_flow_regularity(const drift::FlowTable& f, double p1,
                                                double (*weight)(const std::vector<double>&) = gaussian_weight) {
  if (!(p1 >= 1.0)) throw std::domain_error("empirical_flow_regularity: p1 must be >= 1");
  if (f.x_points.size() < 2 || f.s_nodes.empty()) throw std::invalid_argument("empirical_flow_regularity: need >= 2 points");
  FlowRegularity out;
  out.p1 = p1;
  const std::size_t T = f.n_nodes - 1, nx = f.x_points.size();
  std::vector<std::size_t> live;
  for (std::size_t p = 0; p < f.n_paths; ++p)
    if (!f.flagged[p]) live.push_back(p);
  out.excluded_paths = f.n_paths - live.size();
  if (live.empty()) throw std::runtime_error("empirical_flow_regularity: every path was flagged");
  const double np = static_cast<double>(live.size());

  for (std::size_t lag = 1; lag < nx; lag *= 2) {
    stats::Neumaier m, h;
    std::size_t count = 0;
    for (std::size_t i = 0; i + lag < nx; ++i) {
      h.add(detail::point_distance(f.x_points[i], f.x_points[i + lag]));
      for (auto p : live) m.add(detail::dist_pow(f, p, 0, i, T, 0, i + lag, T, p1));
      ++count;
    }
    out.spatial.lags.push_back(h.value() / static_cast<double>(count));
    out.spatial.moments.push_back(m.value() / (np * static_cast<double>(count)));
  }
  detail::finish(out.spatial);

  const std::size_t s0 = f.s_nodes[0], span = T - s0, xi = nx / 2;
  for (std::size_t lag = 1; lag <= std::max<std::size_t>(1, span / 8); lag *= 2) {
    stats::Neumaier m;
    std::size_t count = 0;
    for (std::size_t t = s0; t + lag <= T; ++t) {
      for (auto p : live) m.add(detail::dist_pow(f, p, 0, xi, t, 0, xi, t + lag, p1));
      ++count;
    }
    out.time.lags.push_back(static_cast<double>(lag) * f.dt);
    out.time.moments.push_back(m.value() / (np * static_cast<double>(count)));
  }
  detail::finish(out.time);

  for (std::size_t a = 1; a < f.s_nodes.size(); ++a) {
    if (f.s_nodes[a] == f.s_nodes[0]) continue;
    stats::Neumaier m;
    for (auto p : live) m.add(detail::dist_pow(f, p, 0, xi, T, a, xi, T, p1));
    out.start.lags.push_back(std::abs(static_cast<double>(f.s_nodes[a]) - static_cast<double>(f.s_nodes[0])) * f.dt);
    out.start.moments.push_back(m.value() / np);
  }
  detail::finish(out.start);

  // Discrete W^{1,p1}(w) norm of x ↦ X^x_{s0,T}; derivative by differences between neighbours.
  std::vector<double> norm2(live.size());
  for (std::size_t k = 0; k < live.size(); ++k) {
    const auto p = live[k];
    stats::Neumaier acc;
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      const double h = detail::point_distance(f.x_points[i], f.x_points[i + 1]);
      std::vector<double> mid(f.d);
      for (std::size_t c = 0; c < f.d; ++c) mid[c] = 0.5 * (f.x_points[i][c] + f.x_points[i + 1][c]);
      double val = 0.0, der = 0.0;
      for (std::size_t c = 0; c < f.d; ++c) {
        const double a = f.at(p, 0, i, T, c), b = f.at(p, 0, i + 1, T, c);
        val += 0.25 * (a + b) * (a + b);
        der += (b - a) * (b - a) / (h * h);
      }
      acc.add(weight(mid) * h * (std::pow(val, 0.5 * p1) + std::pow(der, 0.5 * p1)));
    }
    const double nrm = std::pow(acc.value(), 1.0 / p1);
    norm2[k] = nrm * nrm;
  }
  out.sobolev_norm = std::sqrt(stats::mean_se(norm2).mean);
  return out;
}

inline nlohmann::ordered_json to_json(const SlopeTable& t) {
  return {{"lags", t.lags}, {"moments", t.moments}, {"slope", t.slope}};
}

inline nlohmann::ordered_json to_json(const FlowRegularity& r) {
  return {{"p1", r.p1},
          {"spatial", to_json(r.spatial)},
          {"time", to_json(r.time)},
          {"start", to_json(r.start)},
          {"sobolev_norm", r.sobolev_norm},
          {"excluded_paths", r.excluded_paths}};
}

// Evenly spaced points along the first axis.
inline std::vector<std::vector<double>> line_points(std::size_t d, double lo, double hi, std::size_t count) {
  if (count < 2) throw std::invalid_argument("line_points: need at least two points");
  std::vector<std::vector<double>> pts(count, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < count; ++i)
    pts[i][0] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return pts;
}

struct FlowRequest {
  double p1 = 2.0;
  double time_exponent = 0.0;  // lower bound for the time slope is slack · p1 · time_exponent
  double slack = 0.9;
  double spatial_tol = 0.1;    // spatial slope >= p1·(1 - spatial_tol)
  std::vector<std::size_t> s_nodes{0};
  std::vector<std::vector<double>> x_points = line_points(1, -1.0, 1.0, 17);
};

// Solves the flow for b, then checks the spatial and time slopes against their lower bounds.
inline CheckResult check_flow_regularity(const fbm::FbmEnsemble& e, const drift::DriftField& b, const FlowRequest& q,
                                         const io::Executor& ex = io::serial()) {
  Stopwatch sw;
  const auto f = drift::solve_flow(e, b, q.s_nodes, q.x_points, ex);
  const auto reg = empirical_flow_regularity(f, q.p1);
  const double need_t = q.slack * q.p1 * q.time_exponent, need_x = q.p1 * (1.0 - q.spatial_tol);
  CheckResult r;
  r.check_name = "flow_regularity";
  const bool ok = reg.time.slope >= need_t && reg.spatial.slope >= need_x;
  r.verdict = ok ? Verdict::pass : Verdict::fail;
  r.implied_constant = reg.time.moments.empty() ? 0.0 : reg.time.moments.front() / std::pow(reg.time.lags.front(), reg.time.slope);
  r.worst_point = {reg.time.slope, reg.spatial.slope};
  r.tolerances = {{"time_slope_min", need_t}, {"spatial_slope_min", need_x}};
  r.details = to_json(reg);
  r.runtime = sw.seconds();
  return r;
}

// Weighted Sobolev norm of the time-T flow map per mollification level, within ratio_tol × median.
inline CheckResult check_flow_sobolev_levels(const fbm::FbmEnsemble& e, const drift::DriftField& b,
                                             const std::vector<double>& levels, const FlowRequest& q,
                                             double ratio_tol = 2.0, const io::Executor& ex = io::serial()) {
  Stopwatch sw;
  if (levels.empty()) throw std::invalid_argument("check_flow_sobolev_levels: no levels");
  std::vector<double> norms;
  std::size_t excluded = 0;
  for (double eps : levels) {
    const auto f = drift::solve_flow(e, drift::mollify(b, eps), q.s_nodes, q.x_points, ex);
    const auto reg = empirical_flow_regularity(f, q.p1);
    norms.push_back(reg.sobolev_norm);
    excluded = std::max(excluded, reg.excluded_paths);
  }
  const double ratio = spread_over_median(norms);
  const auto arg = static_cast<std::size_t>(std::max_element(norms.begin(), norms.end()) - norms.begin());
  CheckResult r;
  r.check_name = "flow_sobolev_levels";
  r.verdict = ratio <= ratio_tol ? Verdict::pass : Verdict::unstable;
  r.implied_constant = norms[arg];
  r.worst_point = {levels[arg]};
  r.tolerances = {{"max_over_median", ratio_tol}};
  r.details = {{"levels", levels}, {"sobolev_norms", norms}, {"max_over_median", ratio}, {"excluded_paths", excluded}};
  r.runtime = sw.seconds();
  return r;
}

}  // namespace fracsde::verify
