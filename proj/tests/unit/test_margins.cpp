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


#include "nsadf/error.hpp"
#include "nsadf/margins.hpp"
#include "nsadf/rng.hpp"
#include "nsadf/series.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

using namespace nsadf;

namespace {

struct Synthetic
{
  std::vector<double> t, day, y;
};

// y = 5 + 2 t/n + 0.8 sin(2 pi d/90) + exp(0.2 + 0.3 t/n) R, R standard normal
// below its 0.9 quantile and 1.28 + GPD(0.5, 0.1) above.
Synthetic synthetic(std::size_t n, std::uint64_t seed)
{
  Rng rng(seed);
  Synthetic s;
  s.t = time_index(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double tn = s.t[i] / static_cast<double>(n);
    const double d = static_cast<double>(i % 90 + 1);
    double r = rng.normal();
    if (r > 1.2816)
      r = 1.2816 + 0.5 * (std::pow(rng.uniform(), -0.1) - 1.0) / 0.1;
    s.day.push_back(d);
    s.y.push_back(5.0 + 2.0 * tn + 0.8 * std::sin(2 * std::numbers::pi * d / 90.0) + std::exp(0.2 + 0.3 * tn) * r);
  }
  return s;
}

MarginOptions trend_options(std::size_t n)
{
  MarginOptions o;
  o.loc_basis = BasisSpec{true, 1, static_cast<double>(n), 1, 90.0};
  o.scale_basis = BasisSpec{true, 1, static_cast<double>(n), 0, 90.0};
  o.tail_basis = BasisSpec::constant();
  return o;
}

} // namespace

TEST_SUITE("margins")
{
  TEST_CASE("constant series has zero variance")
  {
    const std::vector<double> y(100, 3.0);
    const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(100, 1);
    CHECK_THROWS_AS(locscale_fit(y, one, one, 0.0), NumericalError);
  }

  TEST_CASE("intercept-only fit is the sample mean and MLE standard deviation")
  {
    Rng rng(3);
    std::vector<double> y(500);
    for (auto& v : y)
      v = 4.0 + 2.0 * rng.normal();
    const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(500, 1);
    const LocScaleFit f = locscale_fit(y, one, one);
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / 500.0;
    double ss = 0.0;
    for (double v : y)
      ss += (v - mean) * (v - mean);
    CHECK(f.loc_coeffs(0) == doctest::Approx(mean).epsilon(1e-10));
    CHECK(std::exp(f.scale_coeffs(0)) == doctest::Approx(std::sqrt(ss / 500.0)).epsilon(1e-8));
  }

  TEST_CASE("linear trend in the location")
  {
    const std::size_t n = 9000;
    Rng rng(4);
    std::vector<double> t = time_index(n), y(n);
    for (std::size_t i = 0; i < n; ++i)
      y[i] = 2.0 + 0.003 * t[i] + rng.normal();
    const Eigen::MatrixXd z = BasisSpec::polynomial(1, 1.0).design(t);
    const LocScaleFit f = locscale_fit(y, z, Eigen::MatrixXd::Ones(9000, 1), 0.0);
    CHECK(std::abs(f.loc_coeffs(0) - 2.0) < 0.1);
    CHECK(std::abs(f.loc_coeffs(1) - 0.003) < 0.0003);
  }

  TEST_CASE("harmonic location term")
  {
    const std::size_t n = 9000;
    Rng rng(5);
    std::vector<double> t = time_index(n), d(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = static_cast<double>(i % 90 + 1);
      y[i] = std::sin(2 * std::numbers::pi * d[i] / 90.0) + rng.normal();
    }
    const BasisSpec b{true, 0, 1.0, 1, 90.0};
    const LocScaleFit f = locscale_fit(y, b.design(t, d), Eigen::MatrixXd::Ones(9000, 1));
    const auto names = b.column_names();
    REQUIRE(names.size() == 3);
    CHECK(std::abs(f.loc_coeffs(1) - 1.0) < 0.05); // sin column
    CHECK(std::abs(f.loc_coeffs(2)) < 0.05);
  }

  TEST_CASE("GCV picks a penalty from the documented grid")
  {
    const auto s = synthetic(2000, 6);
    const auto o = trend_options(2000);
    const LocScaleFit f = locscale_fit(s.y, o.loc_basis.design(s.t, s.day), o.scale_basis.design(s.t, s.day));
    const auto grid = gcv_penalty_grid(2000);
    CHECK(grid.size() == 20);
    CHECK(std::find(grid.begin(), grid.end(), f.penalty) != grid.end());
  }

  TEST_CASE("locscale rejects a design without an intercept")
  {
    std::vector<double> y{1, 2, 3, 4, 5, 6};
    Eigen::MatrixXd z(6, 1);
    z << 1, 2, 3, 4, 5, 6;
    CHECK_THROWS_AS(locscale_fit(y, z, Eigen::MatrixXd::Ones(6, 1)), InvalidArgument);
  }

  TEST_CASE("residuals and their inverse")
  {
    const auto s = synthetic(3000, 7);
    const MarginalModel m = fit_margin(s.y, s.t, s.day, trend_options(3000));
    for (std::size_t i = 0; i < 3000; i += 97) {
      const double mu = m.mu(s.t[i], s.day[i]), sg = m.sigma(s.t[i], s.day[i]);
      CHECK(m.residual(mu, s.t[i], s.day[i]) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
      CHECK(m.residual(mu + sg, s.t[i], s.day[i]) == doctest::Approx(1.0).epsilon(1e-12));
      const double r = m.residual(s.y[i], s.t[i], s.day[i]);
      CHECK(std::abs(m.from_residual(r, s.t[i], s.day[i]) - s.y[i]) < 1e-12 * (1 + std::abs(s.y[i])));
    }
    const auto res = residuals(s.y, s.t, s.day, m);
    auto sorted = res;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == m.residual_sample);
    CHECK(m.n() == 3000);
  }

  TEST_CASE("semi-empirical CDF: rank branch, seam and tail branch")
  {
    const auto s = synthetic(3000, 8);
    MarginalModel m = fit_margin(s.y, s.t, s.day, trend_options(3000));
    const double u = m.threshold();
    const double q = m.threshold_quantile();
    CHECK(q == 0.9);
    CHECK(m.cdf(m.residual_sample.front(), 100, 10) == doctest::Approx(1.0 / 3001.0).epsilon(1e-12));
    CHECK(m.cdf(u, 100, 10) == doctest::Approx(q).epsilon(1e-12));
    CHECK(m.body_cdf(u) == doctest::Approx(q).epsilon(1e-12));
    CHECK(std::abs(m.cdf(u + 1e-13, 100, 10) - m.cdf(u - 1e-13, 100, 10)) < 1e-12);
    // Exponential tail: r = u + tau log 2 gives 1 - (1 - q)/2.
    m.tail.xi = 0.0;
    const double tau = m.tail_scale(100, 10);
    CHECK(m.cdf(u + tau * std::log(2.0), 100, 10) == doctest::Approx(1.0 - (1.0 - q) / 2.0).epsilon(1e-12));
  }

  TEST_CASE("semi-empirical CDF is nondecreasing and inside (0,1)")
  {
    const auto s = synthetic(3000, 9);
    const MarginalModel m = fit_margin(s.y, s.t, s.day, trend_options(3000));
    double prev = 0.0;
    for (double r = -6.0; r <= 12.0; r += 0.01) {
      const double c = m.cdf(r, 1500, 45);
      CHECK(c >= prev);
      CHECK(c > 0.0);
      CHECK(c < 1.0);
      prev = c;
    }
  }

  TEST_CASE("quantile inverts the CDF")
  {
    const auto s = synthetic(3000, 10);
    const MarginalModel m = fit_margin(s.y, s.t, s.day, trend_options(3000));
    CHECK(m.quantile(m.threshold_quantile(), 10, 5).value == doctest::Approx(m.threshold()).epsilon(1e-12));
    for (double p : {0.91, 0.99, 0.999, 0.99999}) {
      const auto r = m.quantile(p, 2500, 30);
      if (!r.clamped) {
        CHECK(std::abs(m.cdf(r.value, 2500, 30) - p) < 1e-9);
      }
    }
    CHECK_THROWS_AS(m.quantile(0.0, 1, 1), InvalidArgument);
    CHECK_THROWS_AS(m.quantile(1.0, 1, 1), InvalidArgument);
  }

  TEST_CASE("bounded tail clamps at the endpoint")
  {
    const auto s = synthetic(3000, 11);
    MarginalModel m = fit_margin(s.y, s.t, s.day, trend_options(3000));
    m.tail.xi = -0.5;
    const double end = m.threshold() + gpd_upper_endpoint(m.tail_scale(1, 1), -0.5);
    // exp(-0.5 * 800) underflows the conditional survival, so x reaches the endpoint.
    const auto r = m.from_exponential(800.0, 1, 1);
    CHECK(r.clamped);
    const auto near = m.quantile(1.0 - 1e-14, 1, 1);
    CHECK_FALSE(near.clamped);
    CHECK(near.value < end);
    CHECK(r.value == doctest::Approx(end).epsilon(1e-12));
    CHECK_FALSE(m.quantile(0.95, 1, 1).clamped);
  }

  TEST_CASE("exponential transform values and round trip")
  {
    const auto s = synthetic(3000, 12);
    const MarginalModel m = fit_margin(s.y, s.t, s.day, trend_options(3000));
    const double r1 = m.quantile(1.0 - std::exp(-1.0), 700, 20).value;
    CHECK(m.exponential(r1, 700, 20) == doctest::Approx(1.0).epsilon(1e-9));
    const double r2 = m.quantile(0.5, 700, 20).value;
    CHECK(m.exponential(r2, 700, 20) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    for (double v : {2.4, 3.0, 5.0, 9.0, 14.0}) {
      const auto r = m.from_exponential(v, 1200, 33);
      if (!r.clamped) {
        CHECK(std::abs(m.exponential(r.value, 1200, 33) - v) < 1e-6);
      }
    }
  }

  TEST_CASE("transformed series is standard exponential")
  {
    const std::size_t n = 9000;
    const auto sx = synthetic(n, 13);
    const auto sy = synthetic(n, 14);
    const auto o = trend_options(n);
    RawSeries raw{sx.t, sx.day, sx.y, sy.y};
    const MarginalModel mx = fit_margin(raw.x, raw.t, raw.day, o);
    const MarginalModel my = fit_margin(raw.y, raw.t, raw.day, o);
    const ExpSeries e = to_exponential(raw, mx, my);
    for (const auto* col : {&e.x, &e.y}) {
      const double mean = std::accumulate(col->begin(), col->end(), 0.0) / static_cast<double>(n);
      CHECK(mean > 0.95);
      CHECK(mean < 1.05);
      CHECK(*std::min_element(col->begin(), col->end()) >= 0.0);
      // Rate in ten consecutive windows.
      for (std::size_t w = 0; w < 10; ++w) {
        double sum = 0.0;
        for (std::size_t i = w * 900; i < (w + 1) * 900; ++i)
          sum += (*col)[i];
        const double rate = 900.0 / sum;
        CHECK(rate > 0.85);
        CHECK(rate < 1.15);
      }
    }
  }

  TEST_CASE("tail threshold and GPD fit come from the residual sample")
  {
    const auto s = synthetic(5000, 15);
    const MarginalModel m = fit_margin(s.y, s.t, s.day, trend_options(5000));
    CHECK(m.threshold() == doctest::Approx(m.body_quantile(0.9).value));
    // Generating tail: xi = 0.1, tau about 0.5 on the residual scale.
    CHECK(std::abs(m.tail.xi - 0.1) < 0.15);
    CHECK(m.tail_scale(2500, 45) > 0.3);
    CHECK(m.tail_scale(2500, 45) < 0.8);
  }

  TEST_CASE("raw series validation")
  {
    RawSeries r{{1, 2, 2}, {}, {0, 0, 0}, {1, 1, 1}};
    CHECK_THROWS_AS(r.validate(), InvalidArgument);
    RawSeries ok{{1, 2, 3}, {}, {0, 0, 0}, {1, 1, 1}};
    CHECK_NOTHROW(ok.validate());
    RawSeries bad{{1, 2, 3}, {}, {0, NAN, 0}, {1, 1, 1}};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  }
}
