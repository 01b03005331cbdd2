#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracsde/drift/field.hpp"
#include "fracsde/fbm/ensemble.hpp"
#include "fracsde/io/executor.hpp"

namespace fracsde::drift {

// Per-path solution values on the nodes 0, stride, 2·stride, ... of the ensemble grid.
struct SolutionPaths {
  std::size_t n_paths = 0;
  std::size_t n_nodes = 0;
  std::size_t d = 1;
  std::size_t stride = 1;
  double dt = 0.0;  // step of the solution grid
  std::vector<double> X;
  std::vector<std::uint8_t> flagged;

  double x(std::size_t p, std::size_t i, std::size_t c) const { return X[(p * n_nodes + i) * d + c]; }
  const double* path(std::size_t p) const { return X.data() + p * n_nodes * d; }
  std::size_t excluded() const {
    std::size_t n = 0;
    for (auto f : flagged) n += f;
    return n;
  }
};

inline void require_solvable(const DriftField& b) {
  if (b.is_singular())
    throw std::invalid_argument("euler_solve: drift kind '" + to_string(b.kind) + "' must be mollified before solving");
}

// Euler from fine node `start` (a multiple of stride) with state x; writes the states at
// nodes start, start+stride, ... into out. Returns false on a non-finite state.
inline bool euler_path(const fbm::FbmEnsemble& e, std::size_t p, const DriftField& b, std::size_t start, const double* x,
                       std::size_t stride, double* out) {
  const std::size_t d = e.d, n = e.grid.n_steps;
  const double h = e.grid.dt() * static_cast<double>(stride);
  std::vector<double> drift(d);
  for (std::size_t c = 0; c < d; ++c) out[c] = x[c];
  bool finite = true;
  std::size_t k = 0;
  for (std::size_t i = start; i + stride <= n; i += stride, ++k) {
    const double* cur = out + k * d;
    double* nxt = out + (k + 1) * d;
    b.eval(e.grid.time(i), cur, drift.data());
    for (std::size_t c = 0; c < d; ++c) {
      nxt[c] = cur[c] + drift[c] * h + (e.b(p, i + stride, c) - e.b(p, i, c));
      finite = finite && std::isfinite(nxt[c]);
    }
  }
  return finite;
}

// X_{t_{i+1}} = X_{t_i} + b(t_i, X_{t_i})·h + (B_{t_{i+1}} - B_{t_i}) with h = stride·dt.
inline SolutionPaths euler_solve(const fbm::FbmEnsemble& e, const DriftField& b, const std::vector<double>& x0,
                                 std::size_t stride = 1, const io::Executor& ex = io::serial()) {
  require_solvable(b);
  if (x0.size() != e.d || b.d != e.d) throw std::invalid_argument("euler_solve: dimension mismatch");
  if (stride == 0 || e.grid.n_steps % stride != 0) throw std::invalid_argument("euler_solve: stride must divide n_steps");
  SolutionPaths s;
  s.n_paths = e.n_paths;
  s.n_nodes = e.grid.n_steps / stride + 1;
  s.d = e.d;
  s.stride = stride;
  s.dt = e.grid.dt() * static_cast<double>(stride);
  s.X.assign(s.n_paths * s.n_nodes * s.d, 0.0);
  s.flagged.assign(s.n_paths, 0);
  ex.for_each(e.n_paths, [&](std::size_t p) {
    s.flagged[p] = !euler_path(e, p, b, 0, x0.data(), stride, s.X.data() + p * s.n_nodes * s.d);
  });
  return s;
}

// X_{s,t}^x for s in s_nodes, x in x_points, t >= s; NaN for t < s.
struct FlowTable {
  std::vector<std::size_t> s_nodes;
  std::vector<std::vector<double>> x_points;
  std::size_t n_paths = 0;
  std::size_t n_nodes = 0;
  std::size_t d = 1;
  double dt = 0.0;
  std::vector<double> values;
  std::vector<std::uint8_t> flagged;

  std::size_t offset(std::size_t p, std::size_t si, std::size_t xi) const {
    return ((p * s_nodes.size() + si) * x_points.size() + xi) * n_nodes * d;
  }
  double at(std::size_t p, std::size_t si, std::size_t xi, std::size_t t, std::size_t c) const {
    return values[offset(p, si, xi) + t * d + c];
  }
};

inline FlowTable solve_flow(const fbm::FbmEnsemble& e, const DriftField& b, const std::vector<std::size_t>& s_nodes,
                            const std::vector<std::vector<double>>& x_points, const io::Executor& ex = io::serial()) {
  require_solvable(b);
  FlowTable f;
  f.s_nodes = s_nodes;
  f.x_points = x_points;
  f.n_paths = e.n_paths;
  f.n_nodes = e.grid.n_nodes();
  f.d = e.d;
  f.dt = e.grid.dt();
  for (auto s : s_nodes)
    if (s > e.grid.n_steps) throw std::invalid_argument("solve_flow: s node beyond the grid");
  for (const auto& x : x_points)
    if (x.size() != e.d) throw std::invalid_argument("solve_flow: point dimension mismatch");
  f.values.assign(f.n_paths * s_nodes.size() * x_points.size() * f.n_nodes * f.d, std::numeric_limits<double>::quiet_NaN());
  f.flagged.assign(f.n_paths, 0);
  ex.for_each(e.n_paths, [&](std::size_t p) {
    for (std::size_t si = 0; si < s_nodes.size(); ++si)
      for (std::size_t xi = 0; xi < x_points.size(); ++xi) {
        double* out = f.values.data() + f.offset(p, si, xi) + s_nodes[si] * f.d;
        if (!euler_path(e, p, b, s_nodes[si], x_points[xi].data(), 1, out)) f.flagged[p] = 1;
      }
  });
  return f;
}

// max over paths and t >= u of |φ_{u,t}(φ_{s,u}(x)) - φ_{s,t}(x)|.
inline double flow_composition_defect(const FlowTable& f, const fbm::FbmEnsemble& e, const DriftField& b, std::size_t si,
                                      std::size_t u_node, std::size_t xi) {
  const std::size_t s = f.s_nodes.at(si), d = f.d;
  if (u_node < s || u_node > e.grid.n_steps) throw std::invalid_argument("flow_composition_defect: need s <= u <= T");
  std::vector<double> out((e.grid.n_steps - u_node + 1) * d);
  double worst = 0.0;
  for (std::size_t p = 0; p < f.n_paths; ++p) {
    const double* mid = f.values.data() + f.offset(p, si, xi) + u_node * d;
    euler_path(e, p, b, u_node, mid, 1, out.data());
    for (std::size_t t = u_node; t <= e.grid.n_steps; ++t)
      for (std::size_t c = 0; c < d; ++c) worst = std::max(worst, std::abs(out[(t - u_node) * d + c] - f.at(p, si, xi, t, c)));
  }
  return worst;
}

}  // namespace fracsde::drift
