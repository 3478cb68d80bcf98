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


#pragma once

#include "nsadf/adf.hpp"
#include "nsadf/evaluation.hpp"
#include "nsadf/margins.hpp"
#include "nsadf/return_curve.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nsadf {

/// One synthetic margin: value = mu(t, d) + sigma(t) R with
///   mu = loc0 + loc_trend (t/n) + harm_sin sin(2 pi d / P) + harm_cos cos(2 pi d / P)
///   log sigma = log_scale0 + log_scale_trend (t/n)
/// and R standard normal, or above its tail_q quantile a GPD(tail_tau, tail_xi)
/// excess when gpd_tail is set.
struct MarginGenerator
{
  double loc0 = 0.0;
  double loc_trend = 0.0;
  double harm_sin = 0.0;
  double harm_cos = 0.0;
  double log_scale0 = 0.0;
  double log_scale_trend = 0.0;
  bool gpd_tail = false;
  double tail_q = 0.9;
  double tail_tau = 0.5;
  double tail_xi = 0.0;
};

/// Stand-in for a summer temperature / dryness pair: seasonal and long-term
/// marginal trends with inverted-logistic dependence whose parameter falls
/// linearly from r_start to r_end (dependence strengthening over time).
struct SurrogateSpec
{
  int n_years = 100;
  int obs_per_year = 90;
  MarginGenerator x{18.0, 4.0, 1.5, -0.5, 0.7, 0.1, true, 0.9, 0.6, -0.1};
  MarginGenerator y{30.0, 6.0, 2.0, 1.0, 1.2, 0.15, false, 0.9, 0.5, 0.0};
  double r_start = 0.9;
  double r_end = 0.4;
  std::uint64_t seed = 1;

  std::size_t n() const { return static_cast<std::size_t>(n_years) * static_cast<std::size_t>(obs_per_year); }
  double dependence(double t) const;
  void validate() const;

  /// No marginal trends or seasonality and a frozen dependence parameter.
  static SurrogateSpec null_spec(double r = 0.6);
};

RawSeries generate_surrogate(const SurrogateSpec& spec);

struct CaseConfig
{
  int obs_per_year = 90;
  /// Years (1-based) at which return curves are reported, on day curve_day.
  std::vector<int> years{1, 25, 50, 75, 100};
  int curve_day = 45;
  double return_period_years = 10000.0;
  /// Bases with a non-positive time_scale are rescaled by the series length.
  MarginOptions margins{BasisSpec{true, 1, 0.0, 1, 90.0}, BasisSpec{true, 1, 0.0, 1, 90.0},
                        BasisSpec{true, 1, 0.0, 0, 90.0}, std::nullopt, 0.9};
  RayGrid grid = RayGrid::uniform();
  QuantileSchedule schedule = QuantileSchedule::linear();
  AdfOptions adf{BasisSpec::polynomial(1, 0.0), 1e-6, {}, 0};
  BernsteinOptions bernstein{7, Link::logit, BasisSpec::polynomial(1, 0.0)};
  std::size_t eta_half_window = 1350;
  double eta_threshold_q = 0.95;
  std::size_t eta_step = 90;
  /// resamples = 0 skips the bootstrap band.
  BootstrapPlan bootstrap{450, 15, 250, 1};
  int workers = 0;

  /// Joint survival probability of a 1-in-return_period_years event.
  double probability() const { return 1.0 / (return_period_years * obs_per_year); }
  void validate() const;
};

struct CaseResult
{
  MarginalModel margin_x;
  MarginalModel margin_y;
  ExpSeries exponential;
  AdfGrid grid;
  BernsteinFit bernstein;
  double p = 0.0;
  std::vector<ReturnCurve> curves_exponential;
  std::vector<ReturnCurve> curves_original;
  std::vector<EtaPoint> rolling;
  /// Model eta 1/(2 lambda*(0.5 | t)) averaged over each rolling window.
  std::vector<double> model_eta;
  /// Bootstrap quantiles of lambda*(w | z_{n/2}) over the rays.
  std::optional<Envelope> bootstrap_band;
  /// Stages finished so far, in order.
  std::vector<std::string> completed;
};

/// Margins, PIT, quantile-regression grid, logit-link Bernstein fit, return
/// curves, rolling eta and the bootstrap band. on_stage runs after each stage
/// with the partial result; a failing stage throws NumericalError naming it.
CaseResult run_case_pipeline(const RawSeries& raw,
                             const CaseConfig& config,
                             const std::function<void(const std::string&, const CaseResult&)>& on_stage = {});

} // namespace nsadf
