#include <catch2/catch_amalgamated.hpp>

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <sstream>
#include <vector>

#include "fracsde/core/quadrature.hpp"
#include "fracsde/core/rng.hpp"
#include "fracsde/core/stats.hpp"
#include "fracsde/fbm/cache_io.hpp"
#include "fracsde/fbm/generators.hpp"
#include "fracsde/fbm/kernel.hpp"
#include "fracsde/io/executor.hpp"

using namespace fracsde;
using Catch::Approx;

namespace {

std::vector<double> column(const fbm::FbmEnsemble& e, std::size_t i, std::size_t c = 0) {
  std::vector<double> v(e.n_paths);
  for (std::size_t p = 0; p < e.n_paths; ++p) v[p] = e.b(p, i, c);
  return v;
}

stats::MeanSe product_moment(const fbm::FbmEnsemble& e, std::size_t i, std::size_t j) {
  std::vector<double> v(e.n_paths);
  for (std::size_t p = 0; p < e.n_paths; ++p) v[p] = e.b(p, i, 0) * e.b(p, j, 0);
  return stats::mean_se(v);
}

}  // namespace

TEST_CASE("covariance closed forms", "[fbm][covariance]") {
  CHECK(fbm::covariance(1.0, 1.0, 0.1) == Approx(1.0));
  CHECK(fbm::covariance(1.0, 1.0, 0.37) == Approx(1.0));
  CHECK(fbm::covariance(2.0, 3.0, 0.5) == Approx(2.0));
  CHECK(fbm::covariance(1.0, 2.0, 0.25) == Approx(0.5 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(fbm::covariance(-0.1, 1.0, 0.3), std::domain_error);
}

TEST_CASE("kernel constant matches the Beta-function closed form", "[fbm][kernel]") {
  for (double H : {0.1, 0.2, 0.3, 0.45}) {
    const double ref = std::sqrt(2.0 * H / ((1.0 - 2.0 * H) * boost::math::beta(1.0 - 2.0 * H, H + 0.5)));
    CHECK(fbm::kernel_constant(H) == Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("kernel normalization", "[fbm][kernel]") {
  for (double H : {0.1, 0.3, 0.45})
    for (double t : {0.5, 2.0}) {
      const double v = fbm::conditional_variance(t, 0.0, H);
      CHECK(std::abs(v - std::pow(t, 2 * H)) / std::pow(t, 2 * H) < 1e-4);
    }
}

TEST_CASE("kernel support, domain and limits", "[fbm][kernel]") {
  CHECK(fbm::kernel_K(1.0, 1.0, 0.3) == 0.0);
  CHECK(fbm::kernel_K(1.0, 1.5, 0.3) == 0.0);
  CHECK_THROWS_AS(fbm::kernel_K(1.0, 0.0, 0.3), std::domain_error);
  CHECK_THROWS_AS(fbm::kernel_K(1.0, -0.2, 0.3), std::domain_error);

  double prev = 1.0;
  for (double H : {0.45, 0.49, 0.499}) {
    const double gap = std::abs(fbm::kernel_K(1.0, 0.5, H) / fbm::kernel_constant(H) - 1.0);
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev < 2e-3);

  std::vector<double> scaled;
  for (double s : {0.99, 0.999, 0.9999}) scaled.push_back(fbm::kernel_K(1.0, s, 0.3) * std::pow(1.0 - s, 0.2));
  CHECK(scaled.back() > 0.0);
  CHECK(std::abs(scaled[2] - scaled[1]) < std::abs(scaled[1] - scaled[0]));
  CHECK(std::abs(scaled[2] - scaled[1]) / scaled[2] < 0.01);
}

TEST_CASE("time derivative of the kernel matches finite differences", "[fbm][kernel]") {
  const double H = 0.3, s = 0.4;
  for (double t : {0.6, 0.9}) {
    const double h = 1e-5;
    const double fd = (fbm::kernel_K(t + h, s, H) - fbm::kernel_K(t - h, s, H)) / (2 * h);
    CHECK(fbm::kernel_K_dt(t, s, H) == Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("conditional variance", "[fbm][kernel]") {
  CHECK(fbm::conditional_variance(0.7, 0.2, 0.5) == Approx(0.5));
  CHECK_THROWS_AS(fbm::conditional_variance(0.5, 0.5, 0.3), std::domain_error);
  double lo = 1.0, hi = 0.0;
  for (int i = 1; i <= 20; ++i)
    for (int j = 0; j < i; ++j) {
      const double t = i / 20.0, s = j / 20.0;
      const double r = fbm::conditional_variance(t, s, 0.3) / std::pow(t - s, 0.6);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  CHECK(hi <= 1.0 + 1e-9);
  CHECK(lo > 0.3);
}

TEST_CASE("adaptive quadrature handles endpoint power singularities", "[core][quadrature]") {
  auto f = [](double x, double, double) { return std::pow(x, -0.7); };
  const auto r = quad::integrate_left_power(f, 0.0, 1.0, -0.7);
  CHECK(r.value == Approx(1.0 / 0.3).epsilon(1e-10));
  auto g = [](double x, double da, double db) { return std::pow(da, -0.4) * std::pow(db, -0.4) * (x * 0 + 1); };
  const auto r2 = quad::integrate_two_sided(g, 0.0, 1.0, -0.4, -0.4);
  CHECK(r2.value == Approx(boost::math::beta(0.6, 0.6)).epsilon(1e-9));
  const auto gl = quad::gauss_legendre(8);
  double s = 0.0;
  for (std::size_t k = 0; k < gl.nodes.size(); ++k) s += gl.weights[k] * std::pow(gl.nodes[k], 14);
  CHECK(s == Approx(2.0 / 15.0).epsilon(1e-13));
}

TEST_CASE("compensated summation and mean/se", "[core][stats]") {
  std::vector<double> v{1e16, 1.0, -1e16, 1.0};
  CHECK(stats::kahan_sum(v) == 2.0);
  const auto m = stats::mean_se(std::vector<double>{1, 2, 3, 4});
  CHECK(m.mean == 2.5);
  CHECK(m.se == Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(stats::loglog_slope(std::vector<double>{1, 2, 4}, std::vector<double>{3, 12, 48}) == Approx(2.0));
}

TEST_CASE("substreams are addressed, not sequential", "[core][rng]") {
  rng::Substream a(7, 3, rng::tag::noise), b(7, 3, rng::tag::noise), c(7, 4, rng::tag::noise), d(7, 3, rng::tag::aux);
  for (int k = 0; k < 5; ++k) {
    const double x = a.normal();
    CHECK(x == b.normal());
    CHECK(x != c.normal());
    CHECK(x != d.normal());
  }
  rng::Substream u(1, 0, rng::tag::mc);
  std::vector<double> z(20000);
  for (auto& x : z) x = u.normal();
  const auto m = stats::mean_se(z);
  CHECK(std::abs(m.mean) < 4 * m.se);
  CHECK(m.var == Approx(1.0).epsilon(0.04));
}

TEST_CASE("grid validation", "[fbm][grid]") {
  CHECK_THROWS_AS(fbm::HurstGrid::make(0.6, 1.0, 10), std::domain_error);
  CHECK_THROWS_AS(fbm::HurstGrid::make(0.3, 0.0, 10), std::domain_error);
  const auto g = fbm::HurstGrid::make(0.3, 2.0, 8);
  CHECK(g.time(0) == 0.0);
  CHECK(g.time(8) == 2.0);
  CHECK(g.snap(0.26) == 1);
}

TEST_CASE("cholesky generator", "[fbm][cholesky]") {
  for (double H : {0.1, 0.3}) {
    const auto g = fbm::HurstGrid::make(H, 1.0, 16);
    const auto e = fbm::sample_cholesky(g, 1, 40000, 11);
    const auto v = stats::mean_se(column(e, 16));
    std::vector<double> sq(e.n_paths);
    for (std::size_t p = 0; p < e.n_paths; ++p) sq[p] = e.b(p, 16, 0) * e.b(p, 16, 0);
    const auto m2 = stats::mean_se(sq);
    CHECK(std::abs(m2.mean - 1.0) < 4 * m2.se);
    CHECK(std::abs(v.mean) < 4 * v.se);
    for (std::size_t p = 0; p < 10; ++p) CHECK(e.b(p, 0, 0) == 0.0);
  }
  const auto g = fbm::HurstGrid::make(0.3, 1.0, 16);
  const auto a = fbm::sample_cholesky(g, 2, 50, 5), b = fbm::sample_cholesky(g, 2, 50, 5);
  CHECK(a.B == b.B);
  const io::Executor four{4, 7};
  CHECK(fbm::sample_cholesky(g, 2, 50, 5, 0, four).B == a.B);
  // coordinates are independent
  std::vector<double> cross(a.n_paths);
  const auto w = fbm::sample_cholesky(g, 2, 20000, 9);
  cross.resize(w.n_paths);
  for (std::size_t p = 0; p < w.n_paths; ++p) cross[p] = w.b(p, 16, 0) * w.b(p, 16, 1);
  const auto c = stats::mean_se(cross);
  CHECK(std::abs(c.mean) < 4 * c.se);
}

TEST_CASE("brownian case has uncorrelated increments", "[fbm][cholesky]") {
  const auto g = fbm::HurstGrid::make(0.5, 1.0, 8);
  const auto e = fbm::sample_cholesky(g, 1, 40000, 3);
  std::vector<double> prod(e.n_paths);
  for (std::size_t p = 0; p < e.n_paths; ++p)
    prod[p] = (e.b(p, 4, 0) - e.b(p, 3, 0)) * (e.b(p, 5, 0) - e.b(p, 4, 0));
  const auto m = stats::mean_se(prod);
  CHECK(std::abs(m.mean) < 4 * m.se);
}

TEST_CASE("volterra generator", "[fbm][volterra]") {
  const auto g = fbm::HurstGrid::make(0.3, 1.0, 128);
  const auto e = fbm::sample_volterra(g, 1, 20000, 21);
  REQUIRE(e.has_dW());
  for (std::size_t p = 0; p < 20; ++p) CHECK(e.b(p, 0, 0) == 0.0);
  const auto m = product_moment(e, 64, 128);
  const double target = fbm::covariance(1.0, 0.5, 0.3);
  CHECK(std::abs(m.mean - target) <= std::max(4 * m.se, 0.02 * target));

  // marginal variances stay exact near 0 and for rough H
  for (double H : {0.1, 0.3}) {
    const auto gh = fbm::HurstGrid::make(H, 1.0, 64);
    const auto eh = fbm::sample_volterra(gh, 1, 20000, 23);
    for (std::size_t i : {1, 2, 16, 64}) {
      const auto v = product_moment(eh, i, i);
      CHECK(std::abs(v.mean - std::pow(gh.time(i), 2 * H)) <= 4 * v.se);
    }
  }

  const auto gb = fbm::HurstGrid::make(0.5, 1.0, 32);
  const auto w = fbm::sample_volterra(gb, 2, 10, 4);
  for (std::size_t p = 0; p < w.n_paths; ++p)
    for (std::size_t c = 0; c < 2; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < 32; ++j) {
        s += w.dw(p, j, c);
        CHECK(w.b(p, j + 1, c) == Approx(s).margin(1e-12));
      }
    }
}

TEST_CASE("circulant generator", "[fbm][circulant]") {
  const double H = 0.3;
  const auto g = fbm::HurstGrid::make(H, 1.0, 64);
  const auto e = fbm::sample_fgn_circulant(g, 1, 10000, 8);
  std::vector<double> inc(e.n_paths);
  for (std::size_t p = 0; p < e.n_paths; ++p) inc[p] = std::pow(e.b(p, 40, 0) - e.b(p, 39, 0), 2);
  const auto m = stats::mean_se(inc);
  CHECK(std::abs(m.mean - std::pow(g.dt(), 2 * H)) < 4 * m.se);
  for (double x : e.B) REQUIRE(std::isfinite(x));
  CHECK(e.B.size() == e.n_paths * g.n_nodes());

  const auto c = fbm::sample_cholesky(g, 1, 10000, 99);
  const auto ks = stats::ks_two_sample(column(e, 64), column(c, 64));
  CHECK(ks.p_value > 0.01);
  CHECK(fbm::sample_fgn_circulant(g, 1, 30, 8).B == fbm::sample_fgn_circulant(g, 1, 30, 8).B);
}

TEST_CASE("generators reject bad requests", "[fbm]") {
  const auto g = fbm::HurstGrid::make(0.3, 1.0, 8);
  CHECK_THROWS(fbm::sample_volterra(g, 0, 10, 1));
  CHECK_THROWS(fbm::sample_cholesky(g, 1, 0, 1));
}

TEST_CASE("binary cache round-trips bit for bit", "[fbm][cache]") {
  const auto g = fbm::HurstGrid::make(0.3, 1.0, 16);
  const auto e = fbm::sample_volterra(g, 2, 7, 13, 100);
  std::stringstream ss;
  fbm::write_cache(ss, e);
  const auto r = fbm::read_cache(ss);
  CHECK(r.B == e.B);
  CHECK(r.dW == e.dW);
  CHECK(r.grid.H == e.grid.H);
  CHECK(r.generator == e.generator);

  std::stringstream bad("garbage bytes");
  CHECK_THROWS(fbm::read_cache(bad));

  std::ostringstream csv;
  fbm::write_csv(csv, e);
  CHECK(csv.str().rfind("path_id,t,B_1,B_2\n", 0) == 0);
}

TEST_CASE("executor reports the failing batch", "[io][executor]") {
  const io::Executor ex{2, 10};
  try {
    ex.for_each(100, [](std::size_t i) {
      if (i == 57) throw std::runtime_error("boom");
    });
    FAIL("no exception");
  } catch (const io::BatchError& e) {
    CHECK(e.batch_index == 5);
  }
}
