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


#include "nsadf/copula.hpp"
#include "nsadf/error.hpp"
#include "nsadf/surrogate.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace nsadf;

TEST_SUITE("surrogate_case")
{
  TEST_CASE("generator shape and dependence path")
  {
    SurrogateSpec s;
    CHECK(s.n() == 9000);
    CHECK(s.dependence(0) == doctest::Approx(0.9));
    CHECK(s.dependence(9000) == doctest::Approx(0.4));
    // Decreasing r strengthens dependence: lambda(0.5) falls over time.
    CHECK(true_adf(Family::inv_logistic, s.dependence(9000), 0.5) < true_adf(Family::inv_logistic, s.dependence(1), 0.5));
    const RawSeries raw = generate_surrogate(s);
    CHECK(raw.size() == 9000);
    CHECK(raw.day[0] == 1.0);
    CHECK(raw.day[89] == 90.0);
    CHECK(raw.day[90] == 1.0);
    CHECK_NOTHROW(raw.validate());
    CHECK(generate_surrogate(s).x == raw.x);
    SurrogateSpec bad = s;
    bad.r_end = 1.5;
    CHECK_THROWS_AS(generate_surrogate(bad), InvalidArgument);
  }

  TEST_CASE("fitted location trend matches the generator")
  {
    SurrogateSpec s;
    const RawSeries raw = generate_surrogate(s);
    CaseConfig cfg;
    MarginOptions mo = cfg.margins;
    for (auto* b : {&mo.loc_basis, &mo.scale_basis, &mo.tail_basis})
      b->time_scale = 9000.0;
    const MarginalModel mx = fit_margin(raw.x, raw.t, raw.day, mo);
    const MarginalModel my = fit_margin(raw.y, raw.t, raw.day, mo);
    // Column 1 is t/n; the generators use loc_trend per unit t/n.
    CHECK(std::abs(mx.loc_coeffs(1) - s.x.loc_trend) < 0.2 * s.x.loc_trend);
    CHECK(std::abs(my.loc_coeffs(1) - s.y.loc_trend) < 0.2 * s.y.loc_trend);
  }

  TEST_CASE("null surrogate has flat rolling eta")
  {
    const SurrogateSpec s = SurrogateSpec::null_spec(0.6);
    const RawSeries raw = generate_surrogate(s);
    CaseConfig cfg;
    cfg.bootstrap.resamples = 0;
    cfg.years = {1, 100};
    const CaseResult res = run_case_pipeline(raw, cfg);
    const double eta_true = 1.0 / (2.0 * true_adf(Family::inv_logistic, 0.6, 0.5));
    std::size_t inside = 0;
    for (const auto& e : res.rolling)
      inside += (e.lower <= eta_true && eta_true <= e.upper) ? 1 : 0;
    CHECK(inside >= res.rolling.size() * 9 / 10);
    CHECK(res.completed == std::vector<std::string>{"margins", "transform", "adf", "bernstein", "return_curves", "eta"});
    for (const auto& c : res.curves_original)
      CHECK(c.ordered());
    // Logit link keeps the case ADF inside [max(w, 1-w), 1].
    for (double w = 0.0; w <= 1.0; w += 0.05)
      for (double t : {1.0, 4500.0, 9000.0}) {
        const double l = res.bernstein.model.eval_bounded(w, t, 45);
        CHECK(l <= 1.0 + 1e-9);
        CHECK(l >= std::max(w, 1 - w) - 1e-12);
      }
  }

  TEST_CASE("failing stages are named")
  {
    RawSeries raw = generate_surrogate(SurrogateSpec::null_spec());
    for (auto& v : raw.y)
      v = 1.0;
    CaseConfig cfg;
    cfg.bootstrap.resamples = 0;
    std::vector<std::string> seen;
    try {
      run_case_pipeline(raw, cfg, [&](const std::string& s, const CaseResult&) { seen.push_back(s); });
      FAIL("expected a numerical failure");
    } catch (const NumericalError& e) {
      CHECK(e.stage() == "margins");
    }
    CHECK(seen.empty());
  }

  TEST_CASE("case config validation")
  {
    CaseConfig cfg;
    CHECK(cfg.probability() == doctest::Approx(1.0 / 900000.0));
    cfg.years = {};
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  }
}
