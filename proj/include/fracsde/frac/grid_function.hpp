#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracsde::frac {

// Values on the uniform grid t_i = i·dt, i = 0..n_steps, d components per node.
struct GridFunction {
  double dt = 0.0;
  std::size_t n_steps = 0;
  std::size_t d = 1;
  std::vector<double> v;

  static GridFunction zeros(double dt, std::size_t n_steps, std::size_t d = 1) {
    if (!(dt > 0.0) || n_steps == 0 || d == 0) throw std::domain_error("GridFunction: invalid grid");
    return GridFunction{dt, n_steps, d, std::vector<double>((n_steps + 1) * d, 0.0)};
  }

  template <class F>
  static GridFunction sample(double dt, std::size_t n_steps, F&& f) {
    auto g = zeros(dt, n_steps, 1);
    for (std::size_t i = 0; i <= n_steps; ++i) g.v[i] = f(g.t(i));
    return g;
  }

  double t(std::size_t i) const { return static_cast<double>(i) * dt; }
  double T() const { return t(n_steps); }
  std::size_t n_nodes() const { return n_steps + 1; }
  double& operator()(std::size_t i, std::size_t c = 0) { return v[i * d + c]; }
  double operator()(std::size_t i, std::size_t c = 0) const { return v[i * d + c]; }

  std::vector<double> component(std::size_t c) const {
    std::vector<double> out(n_nodes());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*this)(i, c);
    return out;
  }
  void set_component(std::size_t c, const std::vector<double>& x) {
    for (std::size_t i = 0; i < x.size(); ++i) (*this)(i, c) = x[i];
  }

  bool same_grid(const GridFunction& o) const { return dt == o.dt && n_steps == o.n_steps && d == o.d; }

  GridFunction& operator+=(const GridFunction& o) {
    if (!same_grid(o)) throw std::invalid_argument("GridFunction: grid mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
    return *this;
  }
  GridFunction& operator*=(double a) {
    for (auto& x : v) x *= a;
    return *this;
  }
};

inline GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
inline GridFunction operator*(double s, GridFunction a) { return a *= s; }

inline double sup_distance(const GridFunction& a, const GridFunction& b, std::size_t first = 0) {
  if (!a.same_grid(b)) throw std::invalid_argument("sup_distance: grid mismatch");
  double m = 0.0;
  for (std::size_t i = first * a.d; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

// CSV with columns t, v_1..v_d.
inline void write_csv(std::ostream& os, const GridFunction& f) {
  os << "t";
  for (std::size_t c = 0; c < f.d; ++c) os << ",v_" << c + 1;
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < f.n_nodes(); ++i) {
    auto r = std::to_chars(buf, buf + sizeof buf, f.t(i));
    os.write(buf, r.ptr - buf);
    for (std::size_t c = 0; c < f.d; ++c) {
      r = std::to_chars(buf, buf + sizeof buf, f(i, c));
      os << ',';
      os.write(buf, r.ptr - buf);
    }
    os << '\n';
  }
}

inline GridFunction read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("GridFunction CSV: empty input");
  std::size_t d = 0;
  for (char ch : line) d += (ch == ',');
  if (d == 0) throw std::runtime_error("GridFunction CSV: no value columns");
  std::vector<double> ts, vals;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      const double x = std::stod(cell);
      (col == 0 ? ts : vals).push_back(x);
      ++col;
    }
    if (col != d + 1) throw std::runtime_error("GridFunction CSV: ragged row");
  }
  if (ts.size() < 2) throw std::runtime_error("GridFunction CSV: need at least two nodes");
  GridFunction f{ts[1] - ts[0], ts.size() - 1, d, vals};
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (std::abs(ts[i] - f.t(i)) > 1e-9 * std::max(1.0, f.T())) throw std::runtime_error("GridFunction CSV: grid not uniform");
  return f;
}

}  // namespace fracsde::frac
