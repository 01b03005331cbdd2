#include <catch2/catch_amalgamated.hpp>

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numbers>

#include "fracsde/drift/field.hpp"
#include "fracsde/fbm/generators.hpp"
#include "fracsde/verify/compactness.hpp"
#include "fracsde/verify/density.hpp"
#include "fracsde/verify/flow.hpp"
#include "fracsde/verify/identities.hpp"
#include "fracsde/verify/result.hpp"

using namespace fracsde;
using namespace fracsde::verify;
using Catch::Approx;

TEST_CASE("density constant for a single time", "[verify][density]") {
  // p(x) t^H e^{x²/(4t^{2H})} = e^{-x²/(4t^{2H})}/√(2π), largest at x = 0
  for (double H : {0.2, 0.5}) {
    DensityRequest q;
    q.times = {0.7};
    q.H = H;
    q.resolution = 41;
    const auto r = check_density_bound(q);
    CHECK(r.implied_constant == Approx(1.0 / std::sqrt(2 * std::numbers::pi)).epsilon(1e-12));
    CHECK(r.worst_point[0] == Approx(0.0).margin(1e-12));
    CHECK(r.passed());
  }
}

TEST_CASE("density constant factorizes for Brownian increments", "[verify][density]") {
  DensityRequest q;
  q.times = {0.3, 0.5};
  q.H = 0.5;
  q.resolution = 41;
  const auto r = check_density_bound(q);
  CHECK(r.implied_constant == Approx(1.0 / (2 * std::numbers::pi)).epsilon(1e-10));
  CHECK(r.details["gap_spread"].get<double>() < 1e-10);
  CHECK(r.passed());
}

TEST_CASE("density bound with one derivative is stable", "[verify][density]") {
  DensityRequest q;
  q.times = {0.3, 0.5};
  q.H = 0.3;
  q.resolution = 41;
  q.orders = {0, 1};
  const auto r = check_density_bound(q);
  CHECK(std::isfinite(r.implied_constant));
  CHECK(r.details["gap_spread"].get<double>() <= 0.1);

  q.orders = {1, 0};
  const auto s = check_density_bound(q);
  CHECK(s.verdict != Verdict::fail);

  q.orders = {2, 0};
  CHECK_THROWS_AS(check_density_bound(q), std::domain_error);
  q.orders = {0};
  CHECK_THROWS_AS(check_density_bound(q), std::invalid_argument);
  q.times = {0.5, 0.3};
  CHECK_THROWS_AS(check_density_bound(q), std::domain_error);
}

TEST_CASE("product moments: closed form against quadrature", "[verify][product]") {
  const double H = 0.3;
  const Bump a{0.8, 0.2, 0.5, 0}, b{1.3, -0.1, 0.7, 1};
  CHECK(product_moment_exact({0.6}, {a}, H) == Approx(product_moment_quadrature({0.6}, {a}, H)).epsilon(1e-9));
  CHECK(product_moment_exact({0.6}, {b}, H) == Approx(product_moment_quadrature({0.6}, {b}, H)).epsilon(1e-9));
  CHECK(product_moment_exact({0.6}, {b}, H) == Approx(ibp_first_moment(0.6, b, H)).epsilon(1e-9));
  for (int oa : {0, 1})
    for (int ob : {0, 1}) {
      Bump x = a, y = b;
      x.order = oa;
      y.order = ob;
      CHECK(product_moment_exact({0.4, 0.8}, {x, y}, H) ==
            Approx(product_moment_quadrature({0.4, 0.8}, {x, y}, H)).epsilon(1e-7));
    }
  CHECK(lp_norm(Bump{2.0, 0.0, 1.0, 0}, 2.0) == Approx(2.0 * std::pow(std::numbers::pi, 0.25)));
}

TEST_CASE("product moment constant is stable under halving", "[verify][product]") {
  ProductMomentRequest q;
  q.times = {0.4, 0.8};
  q.bumps = {Bump{1.0, 0.2, 0.5, 0}, Bump{1.0, -0.1, 0.5, 0}};
  q.halvings = 3;
  const auto r = check_product_moment(q);
  CHECK(r.passed());
  CHECK(r.details["sweep"].size() == 4);
  CHECK(r.details["variation"].get<double>() < 0.25);

  // self-similarity: bumps rescaled with the noise leave the constant unchanged
  q.bumps = {Bump{1.0, 0.2, 0.5, 1}, Bump{0.7, -0.1, 0.3, 1}};
  q.scale_bumps = true;
  const auto s = check_product_moment(q);
  CHECK(s.details["variation"].get<double>() < 1e-10);
}

TEST_CASE("simplex integrals", "[verify][simplex]") {
  const auto one = check_simplex_identity({0.4}, 0.5, 2.0);
  CHECK(one.passed());
  CHECK(one.details["closed_form"].get<double>() == Approx(std::pow(1.5, 0.4) / 0.4).epsilon(1e-12));

  const auto two = check_simplex_identity({0.5, 1.3}, 0.0, 2.0);
  CHECK(two.passed());
  CHECK(two.details["closed_form"].get<double>() == Approx(std::pow(2.0, 1.8) * boost::math::beta(0.5, 1.3) / 1.8).epsilon(1e-12));

  const auto three = check_simplex_identity({0.5, 1.3, 0.7}, 0.0, 2.0, 200000, 3);
  CHECK(three.details["monte_carlo"].get<bool>());
  CHECK(three.passed());
  CHECK_THROWS_AS(check_simplex_identity({0.5, -1.0}, 0.0, 1.0), std::domain_error);
}

TEST_CASE("taming bound", "[verify][taming]") {
  const auto r = check_taming_bound({});
  CHECK(r.passed());
  CHECK(r.details["mirror_abs_error"].get<double>() < 1e-8);
  TamingRequest q;
  q.alpha = 0.5;
  q.beta = 0.6;
  q.gamma = 0.4;
  CHECK(check_taming_bound(q).passed());
  q.gamma = 0.8;
  CHECK_THROWS_AS(check_taming_bound(q), std::domain_error);
  CHECK(taming_integral(0.0, 0.5, 0.25, 1.0) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("kernel bounds", "[verify][kernel]") {
  KernelBoundsRequest q;
  q.refinements = {32, 64, 128};
  const auto r = check_kernel_bounds(q);
  CHECK(r.verdict == Verdict::pass);
  CHECK(r.details["increment_gamma"].get<double>() == Approx(0.27));
  q.H = 0.5;
  const auto b = check_kernel_bounds(q);
  CHECK(b.passed());
  CHECK(b.details["kernel_ratio_sup"].get<double>() == Approx(1.0));
  CHECK(b.details["increment_ratio_sup"].get<double>() == 0.0);
  q.H = 0.7;
  CHECK_THROWS_AS(check_kernel_bounds(q), std::domain_error);
}

TEST_CASE("shuffle identity", "[verify][shuffle]") {
  CHECK(shuffles(2, 2).size() == 6);
  CHECK(shuffles(1, 3).size() == 6);
  CHECK(shuffles(2, 3).size() == 90);
  const ScalarFn e = [](double x) { return std::exp(x); };
  const auto r = check_shuffle_identity(e, 0.0, 1.0, 2, 1);
  CHECK(r.passed());
  CHECK(r.details["lhs"].get<double>() == Approx(std::pow(std::numbers::e - 1.0, 2)).epsilon(1e-12));
  CHECK(check_shuffle_identity(e, 0.2, 1.5, 2, 2).passed());
  CHECK(check_shuffle_identity([](double x) { return std::cos(3 * x); }, 0.0, 1.0, 3, 2).passed());
  CHECK_THROWS_AS(check_shuffle_identity(e, 0.0, 1.0, 4, 1), std::domain_error);
}

TEST_CASE("compactness quantities stay bounded over smooth levels", "[verify][compactness]") {
  const auto e = fbm::sample_volterra(fbm::HurstGrid::make(0.3, 1.0, 64), 1, 100, 21);
  const auto r = check_compactness_levels(e, drift::make_drift({"sine", {}}, 1), {0.0}, 0.2, {0.5, 0.25, 0.125});
  CHECK(r.passed());
  CHECK(r.details["levels"].size() == 3);
  CHECK(r.details["derivative_energy_ratio"].get<double>() < 1.1);
  CHECK(spread_over_median({1.0, 2.0, 4.0}) == 2.0);
  CHECK_THROWS_AS(compactness_sweep(e, drift::make_drift({"sine", {}}, 1), {0.0}, 0.2, {}), std::invalid_argument);
}

TEST_CASE("flow regularity of additive noise", "[verify][flow]") {
  const auto e = fbm::sample_volterra(fbm::HurstGrid::make(0.3, 1.0, 256), 1, 300, 22);
  FlowRequest q;
  q.time_exponent = 0.3;
  q.s_nodes = {0, 64, 128};
  const auto r = check_flow_regularity(e, drift::make_drift({"zero", {}}, 1), q);
  CHECK(r.passed());
  CHECK(r.details["spatial"]["slope"].get<double>() == Approx(2.0).epsilon(1e-9));
  CHECK(r.details["time"]["slope"].get<double>() == Approx(0.6).margin(0.05));
  CHECK(r.details["start"]["lags"].size() == 2);

  const auto f = drift::solve_flow(e, drift::make_drift({"zero", {}}, 1), {0}, line_points(1, -1, 1, 5));
  const auto a = empirical_flow_regularity(f, 2.0, [](const std::vector<double>&) { return 1.0; });
  const auto b = empirical_flow_regularity(f, 2.0);
  CHECK(a.sobolev_norm > b.sobolev_norm);
  CHECK_THROWS_AS(empirical_flow_regularity(f, 0.5), std::domain_error);

  const auto s = check_flow_sobolev_levels(e, drift::make_drift({"sine", {}}, 1), {0.5, 0.25, 0.125}, q);
  CHECK(s.passed());
  CHECK(s.details["max_over_median"].get<double>() < 1.1);
}

TEST_CASE("check results serialize", "[verify][io]") {
  CheckResult r;
  r.check_name = "x";
  r.verdict = Verdict::unstable;
  r.worst_point = {0.5};
  const auto j = to_json(r);
  CHECK(j["check_name"] == "x");
  CHECK(j["verdict"] == "unstable");
  CHECK(j["worst_point"][0] == 0.5);
}
