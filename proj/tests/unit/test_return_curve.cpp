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


#include "nsadf/adf.hpp"
#include "nsadf/copula.hpp"
#include "nsadf/error.hpp"
#include "nsadf/evaluation.hpp"
#include "nsadf/margins.hpp"
#include "nsadf/return_curve.hpp"
#include "nsadf/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace nsadf;

namespace {

const AdfGrid& independence_grid()
{
  static const AdfGrid g = [] {
    const ExpSeries s = sample_frozen(Family::gaussian_pos, 0.0, 10000, 21);
    AdfOptions o;
    o.basis = BasisSpec::constant();
    return apply_bounds(lambda_qr_average(s, RayGrid::uniform(), QuantileSchedule::linear(), o));
  }();
  return g;
}

ReturnCurve make_curve(std::vector<double> x, std::vector<double> y)
{
  ReturnCurve c;
  c.p = 1e-3;
  for (std::size_t i = 0; i < x.size(); ++i)
    c.points.push_back({static_cast<double>(i) / static_cast<double>(x.size() - 1), x[i], y[i], false});
  return c;
}

} // namespace

TEST_SUITE("return_curve")
{
  TEST_CASE("unit ADF gives r = log 100 on every ray")
  {
    const AdfGrid& g = independence_grid();
    const std::vector<double> ones(g.rays(), 1.0);
    const std::size_t pair = 0;
    CHECK(g.schedule.pairs[pair].first == doctest::Approx(0.9));
    const ReturnCurve c = exp_curve(g, ones, 1e-3, pair, 1.0);
    for (std::size_t r = 0; r < g.rays(); ++r) {
      const double w = g.grid.rays[r];
      const double s = c.points[r].x + c.points[r].y;
      CHECK(s - g.threshold(r, pair, 0) == doctest::Approx(std::log(100.0)).epsilon(1e-12));
      CHECK(c.points[r].x == doctest::Approx(w * s));
    }
  }

  TEST_CASE("symmetric ray has x = y")
  {
    const AdfGrid& g = independence_grid();
    const ReturnCurve c = exp_curve_averaged(g, lambda_star(g, 0), 1e-3, 1.0);
    CHECK(c.points[50].x == doctest::Approx(c.points[50].y).epsilon(1e-12));
  }

  TEST_CASE("extrapolation direction is enforced")
  {
    const AdfGrid& g = independence_grid();
    const std::vector<double> ones(g.rays(), 1.0);
    CHECK_THROWS_AS(exp_curve(g, ones, 0.1, 0, 1.0), InvalidArgument);
    std::vector<double> low = ones;
    low[50] = 0.2;
    CHECK_THROWS_AS(exp_curve(g, low, 1e-3, 0, 1.0), InvalidArgument);
  }

  TEST_CASE("independence curve is calibrated")
  {
    const AdfGrid& g = independence_grid();
    const ReturnCurve c = enforce_ordering(exp_curve_averaged(g, lambda_star(g, 0), 1e-3, 1.0));
    const auto chk = curve_check(c, Family::gaussian_pos, 0.0, 1000000, 22);
    for (int k = 20; k <= 80; k += 10) {
      CAPTURE(k);
      CHECK(chk[static_cast<std::size_t>(k)].prob >= 5e-4);
      CHECK(chk[static_cast<std::size_t>(k)].prob <= 2e-3);
    }
  }

  TEST_CASE("averaging curves")
  {
    const ReturnCurve a = make_curve({0, 1, 2}, {3, 2, 0});
    const std::vector<ReturnCurve> one{a};
    const ReturnCurve avg1 = average_curves(one);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(avg1.points[i].x == a.points[i].x);
      CHECK(avg1.points[i].y == a.points[i].y);
    }
    const std::vector<ReturnCurve> dup{a, a, a};
    CHECK(average_curves(dup).points[1].x == doctest::Approx(1.0));
    ReturnCurve b = a, c = a;
    b.points[1].x += 0.3;
    c.points[1].x -= 0.3;
    const std::vector<ReturnCurve> bc{b, c};
    CHECK(average_curves(bc).points[1].x == doctest::Approx(1.0));
    ReturnCurve d = make_curve({0, 1}, {1, 0});
    const std::vector<ReturnCurve> mismatch{a, d};
    CHECK_THROWS_AS(average_curves(mismatch), InvalidArgument);
  }

  TEST_CASE("averaged curve lies in the hull of the pair curves")
  {
    const AdfGrid& g = independence_grid();
    const auto ls = lambda_star(g, 0);
    const ReturnCurve avg = exp_curve_averaged(g, ls, 1e-3, 1.0);
    for (std::size_t r = 0; r < g.rays(); ++r) {
      double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
      for (std::size_t j = 0; j < g.pairs(); ++j) {
        const ReturnCurve c = exp_curve(g, ls, 1e-3, j, 1.0);
        lo_x = std::min(lo_x, c.points[r].x);
        hi_x = std::max(hi_x, c.points[r].x);
        lo_y = std::min(lo_y, c.points[r].y);
        hi_y = std::max(hi_y, c.points[r].y);
      }
      CHECK(avg.points[r].x >= lo_x - 1e-12);
      CHECK(avg.points[r].x <= hi_x + 1e-12);
      CHECK(avg.points[r].y >= lo_y - 1e-12);
      CHECK(avg.points[r].y <= hi_y + 1e-12);
    }
  }

  TEST_CASE("stronger dependence pushes the curve outward")
  {
    const AdfGrid& g = independence_grid();
    std::vector<double> l1(g.rays()), l2(g.rays());
    for (std::size_t r = 0; r < g.rays(); ++r) {
      const double w = g.grid.rays[r];
      l1[r] = true_adf(Family::inv_logistic, 0.4, w);
      l2[r] = true_adf(Family::inv_logistic, 0.8, w);
      CHECK(l1[r] <= l2[r] + 1e-15);
    }
    const ReturnCurve c1 = exp_curve_averaged(g, l1, 1e-3, 1.0);
    const ReturnCurve c2 = exp_curve_averaged(g, l2, 1e-3, 1.0);
    for (std::size_t r = 0; r < g.rays(); ++r) {
      CHECK(c1.points[r].x >= c2.points[r].x - 1e-12);
      CHECK(c1.points[r].y >= c2.points[r].y - 1e-12);
    }
  }

  TEST_CASE("ordering projection")
  {
    const ReturnCurve ok = make_curve({0, 1, 2, 3}, {3, 2, 1, 0});
    const ReturnCurve same = enforce_ordering(ok);
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(same.points[i].x == ok.points[i].x);

    const ReturnCurve bad = make_curve({0, 2, 1, 3}, {3, 2, 1, 0});
    const ReturnCurve fixed = enforce_ordering(bad);
    CHECK(fixed.points[1].x == doctest::Approx(1.5));
    CHECK(fixed.points[2].x == doctest::Approx(1.5));

    Rng rng(23);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> x(21), y(21);
      for (int i = 0; i <= 20; ++i) {
        x[static_cast<std::size_t>(i)] = i / 20.0 * 5 + rng.normal();
        y[static_cast<std::size_t>(i)] = (20 - i) / 20.0 * 5 + rng.normal();
      }
      const ReturnCurve c = make_curve(x, y);
      const ReturnCurve o = enforce_ordering(c);
      CHECK(o.ordered());
      CHECK(o.points.front().x == c.points.front().x);
      CHECK(o.points.front().y == c.points.front().y);
      CHECK(o.points.back().x == c.points.back().x);
      CHECK(o.points.back().y == c.points.back().y);
      const ReturnCurve oo = enforce_ordering(o);
      for (std::size_t i = 0; i < 21; ++i) {
        CHECK(oo.points[i].x == o.points[i].x);
        CHECK(oo.points[i].y == o.points[i].y);
      }
    }
    const auto iso = isotonic_increasing(std::vector<double>{1, 3, 2, 4});
    CHECK(iso == std::vector<double>{1, 2.5, 2.5, 4});
  }

  TEST_CASE("back-transform to the original scale")
  {
    Rng rng(24);
    std::vector<double> t = time_index(3000), x(3000), y(3000);
    for (std::size_t i = 0; i < 3000; ++i) {
      x[i] = 10.0 + 0.001 * t[i] + 2.0 * rng.normal();
      y[i] = -5.0 + std::exp(0.5 * rng.normal());
    }
    MarginOptions o;
    o.loc_basis = BasisSpec::polynomial(1, 3000.0);
    const MarginalModel mx = fit_margin(x, t, {}, o);
    const MarginalModel my = fit_margin(y, t, {}, o);

    ReturnCurve c = make_curve({0.0, std::log(2.0), 4.0, 7.0}, {7.0, 4.0, std::log(2.0), 0.0});
    c.t = 1500;
    const ReturnCurve b = back_transform(c, mx, my);
    CHECK(b.margin == Margin::original);
    CHECK(b.points[1].x == doctest::Approx(mx.from_residual(mx.body_quantile(0.5).value, 1500, 0)).epsilon(1e-12));
    CHECK(b.ordered());
    // Tail branch round trip.
    for (std::size_t i = 2; i < 4; ++i) {
      const double r = mx.residual(b.points[i].x, 1500, 0);
      CHECK(mx.exponential(r, 1500, 0) == doctest::Approx(c.points[i].x).epsilon(1e-6));
    }
    CHECK_THROWS_AS(back_transform(b, mx, my), InvalidArgument);
  }

  TEST_CASE("bounded tails flag clamped points")
  {
    std::vector<double> t = time_index(2000), v(2000);
    Rng rng(25);
    for (auto& a : v)
      a = rng.uniform(); // bounded above
    const MarginalModel m = fit_margin(v, t, {}, MarginOptions{});
    REQUIRE(m.tail.xi < 0.0);
    ReturnCurve c = make_curve({0.0, 60.0}, {60.0, 0.0});
    c.t = 10;
    const ReturnCurve b = back_transform(c, m, m);
    CHECK(b.points[0].clamped);
    CHECK(b.points[1].clamped);
  }
}
