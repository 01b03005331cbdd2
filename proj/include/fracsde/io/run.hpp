#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracsde/core/stats.hpp"
#include "fracsde/drift/convergence.hpp"
#include "fracsde/drift/euler.hpp"
#include "fracsde/drift/field.hpp"
#include "fracsde/drift/jacobian.hpp"
#include "fracsde/fbm/cache_io.hpp"
#include "fracsde/fbm/generators.hpp"
#include "fracsde/girsanov/girsanov.hpp"
#include "fracsde/io/config.hpp"
#include "fracsde/io/executor.hpp"
#include "fracsde/io/mc.hpp"
#include "fracsde/regimes/regimes.hpp"
#include "fracsde/verify/identities.hpp"
#include "fracsde/verify/compactness.hpp"
#include "fracsde/verify/density.hpp"
#include "fracsde/verify/flow.hpp"
#include "fracsde/verify/result.hpp"

namespace fracsde::io {

enum ExitCode : int { exit_ok = 0, exit_failed_check = 1, exit_schema = 2, exit_regime = 3, exit_numeric = 4 };

namespace detail {

using json = nlohmann::ordered_json;

inline std::string num(double x) {
  std::string s;
  fbm::detail::append_number(s, x);
  return s;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline Executor executor(const RunConfig& c) { return {c.workers, c.batch_size}; }

inline regimes::RegimeParams regime(const RunConfig& c) {
  return {c.H, static_cast<int>(c.d), c.p, c.q};
}

inline drift::DriftField raw_drift(const RunConfig& c) {
  return drift::make_drift({c.drift_kind, c.drift_params}, c.d, {c.box_lo, c.box_hi});
}

// Singular kinds are replaced by their finest mollification.
inline drift::DriftField solvable_drift(const RunConfig& c) {
  auto b = raw_drift(c);
  return b.is_singular() ? drift::mollify(b, c.mollification_levels.back()) : b;
}

inline fbm::FbmEnsemble ensemble(const RunConfig& c, std::optional<fbm::Generator> force = std::nullopt) {
  const auto g = fbm::HurstGrid::make(c.H, c.T, c.n_steps);
  return fbm::sample(force.value_or(fbm::generator_from_string(c.generator)), g, c.d, c.n_paths, c.seed, 0, executor(c));
}

inline void write_solution_csv(std::ostream& os, const drift::SolutionPaths& s) {
  std::string line = "path_id,t";
  for (std::size_t c = 0; c < s.d; ++c) line += ",X_" + std::to_string(c + 1);
  os << line << '\n';
  for (std::size_t p = 0; p < s.n_paths; ++p)
    for (std::size_t i = 0; i < s.n_nodes; ++i) {
      line = std::to_string(p) + "," + num(static_cast<double>(i) * s.dt);
      for (std::size_t c = 0; c < s.d; ++c) line += "," + num(s.x(p, i, c));
      os << line << '\n';
    }
}

inline json holder_json(const drift::HolderTable& h) {
  return {{"lags", h.lags}, {"moments", h.moments}, {"slope", h.slope}};
}

inline int simulate(const RunConfig& c, const std::filesystem::path& out) {
  const auto e = ensemble(c);
  const auto b = solvable_drift(c);
  const auto sol = drift::euler_solve(e, b, c.x0, 1, executor(c));
  std::vector<double> bt2;
  for (std::size_t p = 0; p < e.n_paths; ++p) {
    double z = 0.0;
    for (std::size_t k = 0; k < e.d; ++k) z += e.b(p, e.grid.n_steps, k) * e.b(p, e.grid.n_steps, k);
    bt2.push_back(z / static_cast<double>(e.d));
  }
  const auto m = stats::mean_se(bt2);
  json j;
  j["experiment"] = "simulate";
  j["generator"] = fbm::to_string(e.generator);
  j["n_paths"] = e.n_paths;
  j["excluded_paths"] = sol.excluded();
  j["terminal_second_moment"] = {{"estimate", m.mean}, {"standard_error", m.se}, {"exact", std::pow(c.T, 2.0 * c.H)}};
  j["holder"] = holder_json(drift::holder_table(sol));
  write_json(out / "simulate_summary.json", j);
  std::ofstream fb(out / "paths.csv", std::ios::binary);
  fbm::write_csv(fb, e);
  std::ofstream fs(out / "solution.csv", std::ios::binary);
  write_solution_csv(fs, sol);
  if (c.write_cache) fbm::save_cache((out / "paths.bin").string(), e);
  return exit_ok;
}

inline int girsanov_run(const RunConfig& c, const std::filesystem::path& out) {
  const auto raw = raw_drift(c);
  if (raw.is_singular()) drift::require_admissible(regime(c));
  const auto e = ensemble(c, fbm::Generator::volterra);
  const auto b = solvable_drift(c);
  girsanov::WeightOptions opt;
  for (double t : c.checkpoint_times) opt.checkpoint_nodes.push_back(e.grid.snap(t));
  const auto r = girsanov::girsanov_weight(e, b, opt, executor(c));
  std::optional<girsanov::KazamakiReport> k;
  if (!opt.checkpoint_nodes.empty()) k = girsanov::kazamaki_diagnostic(r, e.grid);
  auto j = girsanov::summary_json(r, k);
  write_json(out / "girsanov_summary.json", j);
  std::ofstream os(out / "girsanov_weights.csv", std::ios::binary);
  girsanov::write_csv(os, r);
  return exit_ok;
}

inline int converge(const RunConfig& c, const std::filesystem::path& out) {
  const auto reg = regime(c);
  drift::require_admissible(reg);
  const auto e = ensemble(c);
  const auto t = drift::convergence_study(e, raw_drift(c), reg, c.mollification_levels, c.step_refinements, c.x0,
                                          executor(c));
  json j;
  j["experiment"] = "converge";
  auto& lv = j["mollification"] = json::array();
  for (std::size_t k = 0; k < t.distances.size(); ++k)
    lv.push_back({{"epsilon", t.levels[k]}, {"epsilon_next", t.levels[k + 1]}, {"distance", t.distances[k].mean},
                  {"standard_error", t.distances[k].se}});
  j["mollification_rate"] = t.mollification_rate;
  j["mean_ratio"] = t.mean_ratio;
  auto& st = j["step_halving"] = json::array();
  for (std::size_t k = 0; k < t.step_distances.size(); ++k)
    st.push_back({{"dt", t.step_sizes[k]}, {"distance", t.step_distances[k].mean},
                  {"standard_error", t.step_distances[k].se}});
  j["step_rate"] = t.step_rate;
  j["holder"] = holder_json(t.holder);
  j["excluded_paths"] = t.excluded_paths;
  write_json(out / "converge_summary.json", j);
  std::ofstream os(out / "converge.csv", std::ios::binary);
  os << "kind,scale,distance,standard_error\n";
  for (std::size_t k = 0; k < t.distances.size(); ++k)
    os << "mollification," << num(t.levels[k]) << ',' << num(t.distances[k].mean) << ',' << num(t.distances[k].se) << '\n';
  for (std::size_t k = 0; k < t.step_distances.size(); ++k)
    os << "step," << num(t.step_sizes[k]) << ',' << num(t.step_distances[k].mean) << ','
       << num(t.step_distances[k].se) << '\n';
  return exit_ok;
}

inline verify::FlowRequest flow_request(const RunConfig& c) {
  verify::FlowRequest q;
  q.p1 = c.p1;
  const auto hb = regimes::holder_exponents(regime(c));
  if (!hb) throw drift::RegimeError("(H1) violated: no Holder exponent available for the flow check");
  q.time_exponent = hb->time_bound;
  const std::size_t n = c.n_steps;
  q.s_nodes = {0};
  for (std::size_t div : {16, 8, 4, 2})
    if (n / div > 0 && n / div != q.s_nodes.back()) q.s_nodes.push_back(n / div);
  q.x_points = verify::line_points(c.d, -1.0, 1.0, 17);
  return q;
}

inline void write_slopes_csv(const std::filesystem::path& path, const verify::FlowRegularity& r) {
  std::ofstream os(path, std::ios::binary);
  os << "kind,lag,moment\n";
  auto dump = [&](const char* kind, const verify::SlopeTable& t) {
    for (std::size_t k = 0; k < t.lags.size(); ++k) os << kind << ',' << num(t.lags[k]) << ',' << num(t.moments[k]) << '\n';
  };
  dump("spatial", r.spatial);
  dump("time", r.time);
  dump("start", r.start);
}

inline std::vector<verify::CheckResult> flow_checks(const RunConfig& c, const std::filesystem::path& out) {
  const auto e = ensemble(c);
  const auto q = flow_request(c);
  auto reg = verify::check_flow_regularity(e, solvable_drift(c), q, executor(c));
  auto lev = verify::check_flow_sobolev_levels(e, raw_drift(c), c.mollification_levels, q, 2.0, executor(c));
  const auto f = drift::solve_flow(e, solvable_drift(c), q.s_nodes, q.x_points, executor(c));
  write_slopes_csv(out / "flow_slopes.csv", verify::empirical_flow_regularity(f, q.p1));
  return {reg, lev};
}

inline verify::CheckResult holder_check(const RunConfig& c, const std::filesystem::path& out) {
  verify::Stopwatch sw;
  const auto cache = out / "paths.bin";
  const bool cached = std::filesystem::exists(cache);
  const auto e = cached ? fbm::load_cache(cache.string()) : ensemble(c);
  const auto b = solvable_drift(c);
  std::vector<double> x0(e.d, 0.0);
  const auto h = drift::holder_table(drift::euler_solve(e, b, x0, 1, executor(c)));
  verify::CheckResult r;
  r.check_name = "holder";
  const double H = e.grid.H;
  if (c.drift_kind == "zero") {
    r.verdict = std::abs(h.slope - 2.0 * H) <= 0.05 ? verify::Verdict::pass : verify::Verdict::fail;
    r.tolerances = {{"slope_target", 2.0 * H}, {"slope_abs_tol", 0.05}};
  } else {
    const auto hb = regimes::holder_exponents({H, static_cast<int>(e.d), c.p, c.q});
    const double need = hb ? 0.9 * 2.0 * hb->time_bound : 0.0;
    r.verdict = hb && h.slope >= need ? verify::Verdict::pass : verify::Verdict::fail;
    r.tolerances = {{"slope_min", need}};
  }
  r.implied_constant = h.moments.front() / std::pow(h.lags.front(), h.slope);
  r.worst_point = {h.slope};
  r.details = holder_json(h);
  r.details["source"] = cached ? "cache" : "sampled";
  r.runtime = sw.seconds();
  return r;
}

inline std::vector<verify::CheckResult> verify_checks(const RunConfig& c, const std::filesystem::path& out) {
  const std::string& k = c.check;
  if (k == "holder") return {holder_check(c, out)};
  if (k == "density") {
    verify::DensityRequest q;
    q.times = {0.3, 0.5};
    q.H = c.H;
    q.d = c.d;
    return {verify::check_density_bound(q)};
  }
  if (k == "product_moment") {
    verify::ProductMomentRequest q;
    q.times = {0.4, 0.8};
    q.bumps = {{1.0, 0.2, 0.5, 0}, {1.0, -0.1, 0.5, 0}};
    q.H = c.H;
    return {verify::check_product_moment(q)};
  }
  if (k == "simplex") return {verify::check_simplex_identity({0.5, 1.3, 0.7}, 0.0, 2.0, 1000000, c.seed)};
  if (k == "taming") return {verify::check_taming_bound({})};
  if (k == "kernel_bounds") {
    verify::KernelBoundsRequest q;
    q.H = c.H;
    q.T = c.T;
    return {verify::check_kernel_bounds(q)};
  }
  if (k == "shuffle") return {verify::check_shuffle_identity([](double s) { return std::exp(s); }, 0.0, 1.0, 2, 2)};
  if (k == "compactness") {
    const auto e = ensemble(c, fbm::Generator::volterra);
    const double beta = drift::compactness_beta(c.H, static_cast<int>(c.d), c.p, c.q);
    if (!(beta > 0.0)) throw drift::RegimeError("compactness: no admissible beta > 0 for this (H, d, p, q)");
    return {verify::check_compactness_levels(e, raw_drift(c), c.x0, beta, c.mollification_levels, 2.0, executor(c))};
  }
  return flow_checks(c, out);
}

inline int verify_run(const RunConfig& c, const std::filesystem::path& out) {
  const auto results = verify_checks(c, out);
  json j;
  j["experiment"] = "verify";
  j["check"] = c.check;
  auto& arr = j["results"] = json::array();
  bool ok = true;
  for (const auto& r : results) {
    arr.push_back(verify::to_json(r));
    ok = ok && r.passed();
    std::cout << r.check_name << ": " << verify::to_string(r.verdict) << '\n';
  }
  write_json(out / ("verify_" + c.check + ".json"), j);
  return ok ? exit_ok : exit_failed_check;
}

inline int regimes_run(const RunConfig& c, const std::filesystem::path& out) {
  const auto rep = regimes::classify(regime(c));
  const auto text = regimes::render(rep);
  std::cout << text << '\n';
  write_text(out / "regimes_report.json", text + "\n");
  if (c.sweep) {
    const auto pts = regimes::region_sample(c.H, static_cast<int>(c.d), regimes::lattice(1.0, 20.0, 39, true),
                                            regimes::lattice(1.0, 20.0, 39, true));
    std::ofstream os(out / "regimes_region.csv", std::ios::binary);
    regimes::write_region_csv(os, pts);
  }
  return exit_ok;
}

}  // namespace detail

// Validates, dispatches and writes artifacts under output_dir. Errors propagate as exceptions;
// exit_code() maps them.
inline int run(const RunConfig& c) {
  validate(c);
  const std::filesystem::path out(c.output_dir);
  std::filesystem::create_directories(out);
  detail::write_text(out / "config.cfg", serialize(c));
  if (c.experiment == "simulate") return detail::simulate(c, out);
  if (c.experiment == "girsanov") return detail::girsanov_run(c, out);
  if (c.experiment == "converge") return detail::converge(c, out);
  if (c.experiment == "flow") {
    const auto rs = detail::flow_checks(c, out);
    nlohmann::ordered_json j;
    j["experiment"] = "flow";
    bool ok = true;
    for (const auto& r : rs) {
      j[r.check_name] = verify::to_json(r);
      ok = ok && r.passed();
    }
    detail::write_json(out / "flow_summary.json", j);
    return ok ? exit_ok : exit_failed_check;
  }
  if (c.experiment == "verify") return detail::verify_run(c, out);
  return detail::regimes_run(c, out);
}

// Runs and maps failures to exit codes, printing the diagnostic to `err`.
inline int run_guarded(const RunConfig& c, std::ostream& err = std::cerr) {
  try {
    return run(c);
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << '\n';
    return exit_schema;
  } catch (const drift::RegimeError& e) {
    err << "regime refused: " << e.what() << '\n';
    return exit_regime;
  } catch (const std::exception& e) {
    err << "numeric error: " << e.what() << '\n';
    return exit_numeric;
  }
}

}  // namespace fracsde::io
