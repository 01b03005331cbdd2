#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracsde/core/stats.hpp"
#include "fracsde/drift/field.hpp"
#include "fracsde/drift/jacobian.hpp"
#include "fracsde/fbm/ensemble.hpp"
#include "fracsde/io/executor.hpp"
#include "fracsde/verify/result.hpp"

namespace fracsde::verify {

struct CompactnessSweep {
  std::vector<double> levels;
  std::vector<drift::CompactnessTriple> triples;
  double beta = 0.0;
};

inline CompactnessSweep compactness_sweep(const fbm::FbmEnsemble& e, const drift::DriftField& b, const std::vector<double>& x0,
                                          double beta, const std::vector<double>& levels,
                                          const io::Executor& ex = io::serial()) {
  if (levels.empty()) throw std::invalid_argument("compactness_sweep: no mollification levels");
  if (!(beta > 0.0)) throw std::domain_error("compactness_sweep: beta must be positive");
  CompactnessSweep s{levels, {}, beta};
  for (double eps : levels) s.triples.push_back(drift::compactness_quantities(e, drift::mollify(b, eps), x0, beta, ex));
  return s;
}

// max / median of a positive sequence.
inline double spread_over_median(const std::vector<double>& v) {
  const double med = stats::median(v);
  return med > 0.0 ? *std::max_element(v.begin(), v.end()) / med : HUGE_VAL;
}

// Uniform boundedness surrogate: each quantity's max over levels within `ratio_tol` × its median.
inline CheckResult check_compactness_levels(const fbm::FbmEnsemble& e, const drift::DriftField& b,
                                            const std::vector<double>& x0, double beta, const std::vector<double>& levels,
                                            double ratio_tol = 2.0, const io::Executor& ex = io::serial()) {
  Stopwatch sw;
  const auto s = compactness_sweep(e, b, x0, beta, levels, ex);
  std::vector<double> m2, en, bv;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const auto& t = s.triples[k];
    m2.push_back(t.second_moment.mean);
    en.push_back(t.derivative_energy.mean);
    bv.push_back(t.besov.mean);
    rows.push_back({{"epsilon", levels[k]},
                    {"second_moment", t.second_moment.mean},
                    {"second_moment_se", t.second_moment.se},
                    {"derivative_energy", t.derivative_energy.mean},
                    {"derivative_energy_se", t.derivative_energy.se},
                    {"besov", t.besov.mean},
                    {"besov_se", t.besov.se}});
  }
  const double r1 = spread_over_median(m2), r2 = spread_over_median(en), r3 = spread_over_median(bv);
  const double worst = std::max({r1, r2, r3});
  std::size_t arg = 0;
  const auto& worst_seq = worst == r1 ? m2 : worst == r2 ? en : bv;
  arg = static_cast<std::size_t>(std::max_element(worst_seq.begin(), worst_seq.end()) - worst_seq.begin());

  CheckResult r;
  r.check_name = "compactness";
  r.verdict = worst <= ratio_tol ? Verdict::pass : Verdict::unstable;
  r.implied_constant = std::max({*std::max_element(m2.begin(), m2.end()), *std::max_element(en.begin(), en.end()),
                                 *std::max_element(bv.begin(), bv.end())});
  r.worst_point = {levels[arg]};
  r.tolerances = {{"max_over_median", ratio_tol}};
  r.details = {{"beta", beta},
               {"levels", rows},
               {"second_moment_ratio", r1},
               {"derivative_energy_ratio", r2},
               {"besov_ratio", r3}};
  r.runtime = sw.seconds();
  return r;
}

}  // namespace fracsde::verify
