#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracsde/core/rng.hpp"
#include "fracsde/core/stats.hpp"
#include "fracsde/io/executor.hpp"

namespace fracsde::io {

struct McSummary {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t n_effective = 0;
  std::size_t excluded_paths = 0;
  std::uint64_t seed = 0;
  double wall_time = 0.0;

  double ci_low(double z = 1.959963984540054) const { return estimate - z * standard_error; }
  double ci_high(double z = 1.959963984540054) const { return estimate + z * standard_error; }
};

struct ExcessExclusion : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-path job: returns the sample, or nullopt to exclude the path.
using PathTask = std::function<std::optional<double>(std::uint64_t path, rng::Substream& stream)>;

inline constexpr double max_excluded_fraction = 1e-3;

// Each path draws from its own substream (seed, path, mc), results land in per-path slots and are
// reduced in path order, so the summary does not depend on batch_size or workers.
inline McSummary mc_batch(const PathTask& task, std::size_t n_paths, std::uint64_t seed, std::size_t batch_size = 64,
                          std::size_t workers = 1) {
  if (n_paths == 0) throw std::invalid_argument("mc_batch: n_paths must be positive");
  if (batch_size == 0) throw std::invalid_argument("mc_batch: batch_size must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> value(n_paths, 0.0);
  std::vector<std::uint8_t> ok(n_paths, 0);
  Executor{workers, batch_size}.for_each(n_paths, [&](std::size_t p) {
    rng::Substream s(seed, p, rng::tag::mc);
    if (const auto v = task(p, s); v && std::isfinite(*v)) {
      value[p] = *v;
      ok[p] = 1;
    }
  });
  std::vector<double> kept;
  kept.reserve(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p)
    if (ok[p]) kept.push_back(value[p]);
  McSummary m;
  m.seed = seed;
  m.excluded_paths = n_paths - kept.size();
  if (static_cast<double>(m.excluded_paths) > max_excluded_fraction * static_cast<double>(n_paths))
    throw ExcessExclusion("mc_batch: " + std::to_string(m.excluded_paths) + " of " + std::to_string(n_paths) +
                          " paths excluded");
  const auto ms = stats::mean_se(kept);
  m.estimate = ms.mean;
  m.standard_error = ms.se;
  m.n_effective = kept.size();
  m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

inline nlohmann::ordered_json to_json(const McSummary& m) {
  return {{"estimate", m.estimate},         {"standard_error", m.standard_error}, {"n_effective", m.n_effective},
          {"excluded_paths", m.excluded_paths}, {"seed", m.seed},                 {"wall_time", m.wall_time}};
}

}  // namespace fracsde::io
