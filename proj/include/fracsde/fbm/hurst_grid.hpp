#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracsde::fbm {

struct HurstGrid {
  double H = 0.3;
  double T = 1.0;
  std::size_t n_steps = 1;

  static HurstGrid make(double H, double T, std::size_t n_steps) {
    if (!(H > 0.0 && H <= 0.5)) throw std::domain_error("HurstGrid: H must lie in (0, 1/2], got " + std::to_string(H));
    if (!(T > 0.0)) throw std::domain_error("HurstGrid: T must be positive");
    if (n_steps == 0) throw std::domain_error("HurstGrid: n_steps must be positive");
    return HurstGrid{H, T, n_steps};
  }

  double dt() const { return T / static_cast<double>(n_steps); }
  double time(std::size_t i) const { return i == n_steps ? T : static_cast<double>(i) * dt(); }
  std::size_t n_nodes() const { return n_steps + 1; }
  std::vector<double> times() const {
    std::vector<double> t(n_nodes());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = time(i);
    return t;
  }
  // Nearest grid node to t (clamped to [0,T]).
  std::size_t snap(double t) const {
    if (t <= 0.0) return 0;
    if (t >= T) return n_steps;
    return static_cast<std::size_t>(t / dt() + 0.5);
  }
};

}  // namespace fracsde::fbm
