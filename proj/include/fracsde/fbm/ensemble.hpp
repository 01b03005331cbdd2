#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracsde/fbm/hurst_grid.hpp"

namespace fracsde::fbm {

enum class Generator : std::uint8_t { cholesky = 0, volterra = 1, fgn_circulant = 2 };

inline std::string to_string(Generator g) {
  switch (g) {
    case Generator::cholesky: return "cholesky";
    case Generator::volterra: return "volterra";
    case Generator::fgn_circulant: return "fgn_circulant";
  }
  return "unknown";
}

inline Generator generator_from_string(const std::string& s) {
  if (s == "cholesky") return Generator::cholesky;
  if (s == "volterra") return Generator::volterra;
  if (s == "fgn_circulant") return Generator::fgn_circulant;
  throw std::invalid_argument("unknown generator '" + s + "'");
}

// Paths first_path .. first_path+n_paths-1 of the stream addressed by seed.
// dW[p][j][c] is the increment over [t_j, t_{j+1}]; B[p][i][c] the value at t_i.
struct FbmEnsemble {
  HurstGrid grid;
  std::size_t d = 1;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::uint64_t first_path = 0;
  Generator generator = Generator::volterra;
  std::vector<double> dW;
  std::vector<double> B;

  bool has_dW() const { return !dW.empty(); }
  std::size_t path_stride_B() const { return grid.n_nodes() * d; }
  std::size_t path_stride_dW() const { return grid.n_steps * d; }

  double b(std::size_t p, std::size_t i, std::size_t c) const { return B[(p * grid.n_nodes() + i) * d + c]; }
  double& b(std::size_t p, std::size_t i, std::size_t c) { return B[(p * grid.n_nodes() + i) * d + c]; }
  double dw(std::size_t p, std::size_t j, std::size_t c) const { return dW[(p * grid.n_steps + j) * d + c]; }
  double& dw(std::size_t p, std::size_t j, std::size_t c) { return dW[(p * grid.n_steps + j) * d + c]; }

  std::span<const double> path_B(std::size_t p) const { return {B.data() + p * path_stride_B(), path_stride_B()}; }
  std::span<const double> path_dW(std::size_t p) const {
    if (!has_dW()) return {};
    return {dW.data() + p * path_stride_dW(), path_stride_dW()};
  }
};

}  // namespace fracsde::fbm
