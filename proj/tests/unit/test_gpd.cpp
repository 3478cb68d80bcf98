// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#include "nsadf/basis.hpp"
#include "nsadf/error.hpp"
#include "nsadf/gpd.hpp"
#include "nsadf/rng.hpp"
#include "nsadf/special.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace nsadf;

namespace {

std::vector<double> gpd_sample(std::size_t n, double tau, double xi, std::uint64_t seed)
{
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x)
    v = gpd_quantile_sf(rng.uniform(), tau, xi);
  return x;
}

} // namespace

TEST_SUITE("gpd")
{
  TEST_CASE("cdf at simple points")
  {
    CHECK(gpd_cdf(0.0, GpdParams{1.7, 0.3}) == 0.0);
    CHECK(gpd_cdf(2.0 * std::log(2.0), GpdParams{2.0, 0.0}) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(gpd_cdf(1.0, GpdParams{1.0, 0.5}) == doctest::Approx(1.0 - std::pow(1.5, -2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(gpd_cdf(1.0, GpdParams{0.0, 0.1}), InvalidArgument);
    CHECK_THROWS_AS(gpd_cdf(1.0, GpdParams{-1.0, 0.1}), InvalidArgument);
  }

  TEST_CASE("cdf agrees with integrated density")
  {
    // Composite Simpson on exp(logpdf) over [0, 1] with tau=1, xi=0.5.
    const int n = 2000;
    const double h = 1.0 / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      s += w * std::exp(gpd_logpdf(i * h, 1.0, 0.5));
    }
    s *= h / 3.0;
    CHECK(s == doctest::Approx(0.5556).epsilon(1e-4));
    CHECK(gpd_cdf(1.0, GpdParams{1.0, 0.5}) == doctest::Approx(s).epsilon(1e-10));
  }

  TEST_CASE("cdf is monotone, continuous in xi at zero and capped beyond the endpoint")
  {
    double prev = -1.0;
    for (double x = 0.0; x <= 10.0; x += 0.05) {
      const double c = gpd_cdf(x, GpdParams{1.3, -0.2});
      CHECK(c >= prev);
      prev = c;
      CHECK(std::abs(gpd_cdf(x, GpdParams{1.3, 1e-9}) - gpd_cdf(x, GpdParams{1.3, 0.0})) < 1e-6);
      CHECK(std::abs(gpd_cdf(x, GpdParams{1.3, -1e-9}) - gpd_cdf(x, GpdParams{1.3, 0.0})) < 1e-6);
    }
    CHECK(gpd_cdf(1.3 / 0.2 + 1.0, GpdParams{1.3, -0.2}) == 1.0);
    CHECK(gpd_upper_endpoint(1.3, -0.2) == doctest::Approx(6.5));
  }

  TEST_CASE("quantile inverts the survival function")
  {
    for (double xi : {-0.4, -1e-10, 0.0, 0.3, 1.2})
      for (double s : {0.9, 0.5, 0.01, 1e-6}) {
        const double x = gpd_quantile_sf(s, 0.8, xi);
        CHECK(gpd_sf(x, 0.8, xi) == doctest::Approx(s).epsilon(1e-9));
      }
  }

  TEST_CASE("fit recovers exponential excesses")
  {
    const auto x = gpd_sample(10000, 1.0, 0.0, 11);
    const GpdParams p = gpd_fit(x);
    CHECK(p.tau > 0.95);
    CHECK(p.tau < 1.05);
    CHECK(std::abs(p.xi) < 0.05);
    CHECK(p.converged);
  }

  TEST_CASE("fit recovers GPD(2, 0.2)")
  {
    const auto x = gpd_sample(20000, 2.0, 0.2, 12);
    const GpdParams p = gpd_fit(x);
    CHECK(std::abs(p.tau - 2.0) < 0.1);
    CHECK(std::abs(p.xi - 0.2) < 0.1);
  }

  TEST_CASE("fit beats a reference grid and has a vanishing score")
  {
    for (double xi0 : {-0.3, 0.0, 0.4}) {
      const auto x = gpd_sample(3000, 1.5, xi0, 13 + static_cast<std::uint64_t>(10 * (xi0 + 1)));
      const GpdParams p = gpd_fit(x);
      const double ll = gpd_loglik(x, p.tau, p.xi);
      CHECK(ll == doctest::Approx(p.loglik).epsilon(1e-12));
      for (double tau = 0.5; tau <= 4.0; tau += 0.25)
        for (double xi = -0.9; xi <= 1.5; xi += 0.1)
          CHECK(ll >= gpd_loglik(x, tau, xi) - 1e-9);
      // Score by central differences, step 1e-6 relative.
      const double ht = 1e-6 * p.tau, hx = 1e-6;
      const double gt = (gpd_loglik(x, p.tau + ht, p.xi) - gpd_loglik(x, p.tau - ht, p.xi)) / (2 * ht);
      const double gx = (gpd_loglik(x, p.tau, p.xi + hx) - gpd_loglik(x, p.tau, p.xi - hx)) / (2 * hx);
      CHECK(std::hypot(gt, gx) < 1e-4);
      CHECK(gpd_score(x, p.tau, p.xi).norm() < 1e-4);
    }
  }

  TEST_CASE("fit rejects degenerate and short samples")
  {
    CHECK_THROWS_AS(gpd_fit(std::vector<double>(50, 1.25)), InvalidArgument);
    CHECK_THROWS_AS(gpd_fit(std::vector<double>{1, 2, 3}), InvalidArgument);
  }

  TEST_CASE("intercept-only non-stationary fit nests the stationary fit")
  {
    const auto x = gpd_sample(2000, 0.7, 0.1, 14);
    const GpdParams p = gpd_fit(x);
    const NsGpdParams q = gpd_fit_ns(x, Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(x.size()), 1));
    CHECK(std::exp(q.tau_coeffs(0)) == doctest::Approx(p.tau).epsilon(1e-6));
    CHECK(q.xi == doctest::Approx(p.xi).epsilon(1e-6));
  }

  TEST_CASE("covariate scale recovers a log-linear trend")
  {
    const std::size_t n = 20000;
    Rng rng(15);
    std::vector<double> t(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<double>(i + 1);
      x[i] = gpd_quantile_sf(rng.uniform(), std::exp(0.5 + 0.001 * t[i]), 0.0);
    }
    const Eigen::MatrixXd z = BasisSpec::polynomial(1, 1.0).design(t);
    const NsGpdParams q = gpd_fit_ns(x, z);
    CHECK(std::abs(q.tau_coeffs(0) - 0.5) < 0.05);
    CHECK(std::abs(q.tau_coeffs(1) - 0.001) < 0.0002);
    CHECK(std::abs(q.xi) < 0.05);
  }

  TEST_CASE("non-stationary fit rejects empty or mismatched rows")
  {
    const auto x = gpd_sample(100, 1.0, 0.0, 16);
    CHECK_THROWS_AS(gpd_fit_ns(x, Eigen::MatrixXd(100, 0)), InvalidArgument);
    CHECK_THROWS_AS(gpd_fit_ns(x, Eigen::MatrixXd::Ones(99, 1)), InvalidArgument);
  }
}

TEST_SUITE("special")
{
  TEST_CASE("normal helpers")
  {
    CHECK(norm_cdf(0.0) == doctest::Approx(0.5));
    CHECK(norm_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(norm_sf(10.0) == doctest::Approx(7.61985302416047e-24).epsilon(1e-10));
    CHECK(normal_to_exponential(0.0) == doctest::Approx(std::log(2.0)));
    CHECK(normal_to_exponential(30.0) == doctest::Approx(-std::log(norm_sf(30.0))).epsilon(1e-12));
    for (double p : {1e-12, 0.01, 0.3, 0.5, 0.9, 1 - 1e-9})
      CHECK(norm_cdf(norm_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
}
