#include <catch2/catch_amalgamated.hpp>

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <sstream>
#include <vector>

#include "fracsde/core/quadrature.hpp"
#include "fracsde/core/stats.hpp"
#include "fracsde/drift/field.hpp"
#include "fracsde/fbm/generators.hpp"
#include "fracsde/fbm/kernel.hpp"
#include "fracsde/frac/operators.hpp"
#include "fracsde/girsanov/girsanov.hpp"

using namespace fracsde;
using Catch::Approx;

namespace {

const fbm::FbmEnsemble& shared_ensemble() {
  static const auto e = fbm::sample_volterra(fbm::HurstGrid::make(0.3, 1.0, 256), 1, 20000, 2024);
  return e;
}

drift::DriftField bump() { return drift::make_drift({"gaussian_bump", {{"amplitude", 0.5}, {"width", 1.0}}}, 1); }

}  // namespace

TEST_CASE("cell weights match the incomplete beta", "[girsanov][weights]") {
  namespace bm = boost::math;
  for (double H : {0.1, 0.3, 0.45}) {
    double worst = 0.0;
    for (std::size_t i : {5, 6, 17, 300})
      for (std::size_t j = 0; j < i; ++j) {
        const double a = 1.5 - H, b = 0.5 - H, x0 = double(j) / i, x1 = double(j + 1) / i;
        const double mass = bm::ibeta(a, b, x1) - bm::ibeta(a, b, x0);
        const double ex = std::pow(double(i), 1 - 2 * H) * bm::beta(a, b) * mass;
        worst = std::max(worst, std::abs(girsanov::cell_weight(i, j, H) / ex - 1));
      }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("v for a constant drift", "[girsanov][v]") {
  for (double H : {0.2, 0.3, 0.45}) {
    const auto g = fbm::HurstGrid::make(H, 1.0, 1024);
    const auto e = fbm::sample_volterra(g, 1, 1, 3);
    const auto v = girsanov::drift_to_v(e, drift::make_drift({"constant", {{"c", 1.0}}}, 1))[0];
    const double k = 1.0 / (frac::operator_constant(H) * std::tgamma(0.5 - H));
    double worst = 0.0;
    for (std::size_t i = 1; i <= 1024; i += 13) {
      const double s = g.time(i);
      auto f = [&](double r, double, double db) { return std::pow(db, -0.5 - H) * std::pow(r, 0.5 - H); };
      const double q = quad::integrate_two_sided(f, 0.0, s, 0.5 - H, -0.5 - H, {1e-14, 1e-12, 500}).value;
      worst = std::max(worst, std::abs(v(i, 0) / (k * std::pow(s, H - 0.5) * q) - 1));
    }
    CHECK(worst < 1e-3);
    if (H == 0.45) {
      double dev = 0.0;
      for (std::size_t i = 512; i <= 1024; ++i) dev = std::max(dev, std::abs(v(i, 0) - 1.0));
      CHECK(dev <= 0.05);
    }
  }
}

TEST_CASE("zero drift gives unit weights", "[girsanov][weight]") {
  const auto& e = shared_ensemble();
  const auto z = drift::make_drift({"zero", {}}, 1);
  const auto v = girsanov::drift_to_v(e, z);
  for (std::size_t p = 0; p < 5; ++p)
    for (double x : v[p].v) CHECK(x == 0.0);
  girsanov::WeightOptions opt;
  opt.checkpoint_nodes = {64, 128, 256};
  const auto r = girsanov::girsanov_weight(e, z, opt);
  for (double x : r.xi) REQUIRE(x == 1.0);
  const auto k = girsanov::kazamaki_diagnostic(r, e.grid);
  for (const auto& m : k.estimates) CHECK(m.mean == 1.0);

  std::vector<double> f(e.n_paths);
  for (std::size_t p = 0; p < e.n_paths; ++p) f[p] = e.b(p, 128, 0) * e.b(p, 256, 0);
  const auto a = girsanov::reweighted_expectation(r, f, girsanov::Mode::weight);
  const auto b = stats::mean_se(f);
  CHECK(a.mean == Approx(b.mean).epsilon(1e-14));
}

TEST_CASE("weights are a positive martingale for bounded smooth drift", "[girsanov][weight]") {
  const auto& e = shared_ensemble();
  girsanov::WeightOptions opt;
  opt.checkpoint_nodes = {64, 128, 192, 256};
  const auto r = girsanov::girsanov_weight(e, bump(), opt);
  CHECK(r.excluded == 0);
  for (double x : r.xi) REQUIRE(x > 0.0);
  for (std::size_t p = 0; p < 20; ++p) CHECK(r.xi[p] == Approx(std::exp(-r.ito_sum[p] - 0.5 * r.qv_sum[p])).epsilon(1e-14));
  const std::vector<double> one(e.n_paths, 1.0);
  const auto m = girsanov::reweighted_expectation(r, one, girsanov::Mode::weight);
  CHECK(std::abs(m.mean - 1.0) <= 4 * m.se);

  const auto k = girsanov::kazamaki_diagnostic(r, e.grid);
  CHECK(std::isfinite(k.sup));
  CHECK(k.stable);

  // reweighted covariance of the shifted path
  std::vector<double> f(e.n_paths);
  for (std::size_t p = 0; p < e.n_paths; ++p) {
    const auto bt = girsanov::shifted_path(e, p, bump());
    f[p] = bt[128] * bt[256];
  }
  const auto c = girsanov::reweighted_expectation(r, f, girsanov::Mode::weight);
  const double R = fbm::covariance(1.0, 0.5, 0.3);
  CHECK(std::abs(c.mean - R) <= std::max(4 * c.se, 0.02 * R));
}

TEST_CASE("deterministic drift gives a log-normal weight", "[girsanov][weight]") {
  const auto& e = shared_ensemble();
  girsanov::WeightOptions opt;
  opt.checkpoint_nodes = {128, 256};
  const auto r = girsanov::girsanov_weight(e, drift::make_drift({"constant", {{"c", 0.7}}}, 1), opt);
  const double qv = r.qv_sum[0];
  for (std::size_t p = 1; p < 50; ++p) CHECK(r.qv_sum[p] == Approx(qv).epsilon(1e-12));
  std::vector<double> lx(e.n_paths);
  for (std::size_t p = 0; p < e.n_paths; ++p) lx[p] = std::log(r.xi[p]);
  const auto m = stats::mean_se(lx);
  CHECK(std::abs(m.mean + 0.5 * qv) <= 4 * m.se);
  CHECK(std::abs(m.var - qv) <= 4 * qv * std::sqrt(2.0 / e.n_paths));
  const auto k = girsanov::kazamaki_diagnostic(r, e.grid);
  for (std::size_t c = 0; c < 2; ++c)
    CHECK(std::abs(k.estimates[c].mean - std::exp(r.qv_at[c] / 8)) <= 4 * k.estimates[c].se);
}

TEST_CASE("inverse weights and energy scaling", "[girsanov][weight]") {
  const auto& e = shared_ensemble();
  const auto r = girsanov::girsanov_weight(e, bump());
  std::vector<double> f(e.n_paths);
  for (std::size_t p = 0; p < e.n_paths; ++p) f[p] = r.xi[p];
  const auto inv = girsanov::reweighted_expectation(r, f, girsanov::Mode::inverse_weight);
  CHECK(inv.mean == Approx(1.0).epsilon(1e-12));

  const auto s = girsanov::energy_scaling(
      e, [](double a) { return drift::make_drift({"gaussian_bump", {{"amplitude", a}, {"width", 1.0}}}, 1); },
      {0.25, 0.5, 1.0});
  CHECK(s.exponent == Approx(2.0).margin(1e-9));
  CHECK(s.energies[1].mean > s.energies[0].mean);
}

TEST_CASE("uncoupled ensembles are refused", "[girsanov][errors]") {
  const auto g = fbm::HurstGrid::make(0.3, 1.0, 32);
  const auto c = fbm::sample_cholesky(g, 1, 10, 1);
  CHECK_THROWS_AS(girsanov::drift_to_v(c, bump()), girsanov::CoupledGeneratorRequired);
  CHECK_THROWS_AS(girsanov::girsanov_weight(c, bump()), girsanov::CoupledGeneratorRequired);
}

TEST_CASE("singular drift at the origin hits exclusion limits", "[girsanov][errors]") {
  const auto g = fbm::HurstGrid::make(0.3, 1.0, 32);
  const auto e = fbm::sample_volterra(g, 1, 100, 1);
  drift::DriftField b = drift::make_drift({"constant", {{"c", 1.0}}}, 1);
  b.eval_ = [](double, const double*, double* out) { out[0] = std::numeric_limits<double>::infinity(); };
  CHECK_THROWS_AS(girsanov::girsanov_weight(e, b), girsanov::NumericError);
}

TEST_CASE("weight study on identical and smooth levels", "[girsanov][levels]") {
  const auto e = fbm::sample_volterra(fbm::HurstGrid::make(0.3, 1.0, 128), 1, 2000, 5);
  const auto same = girsanov::weight_convergence_study(e, drift::make_singular_power(0.3, 1.0, 1, {-2, 2}), {0.1, 0.1});
  CHECK(same.l1[0].mean == 0.0);
  const auto smooth = girsanov::weight_convergence_study(e, bump(), {0.1, 0.05, 0.025});
  CHECK(smooth.l2[0] < 1e-2);
  CHECK(smooth.l2[1] < smooth.l2[0]);
}

TEST_CASE("weights of mollified singular drifts form a Cauchy sequence", "[girsanov][cauchy-trend]") {
  const auto e = fbm::sample_volterra(fbm::HurstGrid::make(0.3, 1.0, 256), 1, 10000, 77);
  std::vector<double> levels;
  for (int k = 1; k <= 6; ++k) levels.push_back(std::ldexp(1.0, -k));
  const auto w = girsanov::weight_convergence_study(e, drift::make_singular_power(0.3, 1.0, 1, {-2, 2}), levels);
  for (std::size_t k = 0; k + 1 < w.l2.size(); ++k) CHECK(w.l2[k + 1] < w.l2[k]);
  INFO("geometric-mean L2 ratio " << w.mean_l2_ratio);
  CHECK(w.mean_l2_ratio >= 1.5);
}

TEST_CASE("summary and csv output", "[girsanov][io]") {
  const auto e = fbm::sample_volterra(fbm::HurstGrid::make(0.3, 1.0, 32), 1, 4, 1);
  girsanov::WeightOptions opt;
  opt.checkpoint_nodes = {32};
  const auto r = girsanov::girsanov_weight(e, bump(), opt);
  const auto j = girsanov::summary_json(r, girsanov::kazamaki_diagnostic(r, e.grid));
  CHECK(j["n_paths"] == 4);
  CHECK(j.contains("se_xi"));
  std::ostringstream os;
  girsanov::write_csv(os, r);
  CHECK(os.str().rfind("path_id,ito_sum,qv_sum,xi\n", 0) == 0);
}
