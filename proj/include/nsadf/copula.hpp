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

#include "nsadf/rng.hpp"
#include "nsadf/series.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <utility>

namespace nsadf {

enum class Family
{
  gaussian_pos,
  gaussian_neg,
  inv_logistic,
  inv_alog,
  inv_husler_reiss,
  gauge_model12,
};

inline constexpr std::array<Family, 6> all_families{
  Family::gaussian_pos, Family::gaussian_neg, Family::inv_logistic,
  Family::inv_alog,     Family::inv_husler_reiss, Family::gauge_model12,
};

std::string_view family_name(Family f);
Family parse_family(std::string_view name);

struct CopulaSpec
{
  Family family = Family::inv_logistic;
  std::size_t n = 10000;
  double kappa1 = 0.3;
  double kappa2 = 0.7;
  std::uint64_t seed = 1;
  /// When set, every t uses this parameter instead of the trajectory.
  std::optional<double> frozen;

  void validate() const;
};

struct McmcConfig
{
  double proposal_sd = 1.0;
  int burn_in = 10000;
  int thin = 10;
  std::uint64_t chain_seed = 0;
  /// Adapt proposal_sd towards 30% acceptance during burn-in.
  bool tune = true;
};

struct McmcDiagnostics
{
  double acceptance_rate = 0.0;
  /// Every Metropolis step, burn-in included.
  std::size_t chain_length = 0;
  double proposal_sd = 0.0;
};

/// Dependence parameter at time t (1-based) along the family's linear path.
double param_trajectory(const CopulaSpec& spec, double t);

/// Parameter handed to the sampler; clamps the Gaussian correlation away
/// from +-1.
double sampler_param(Family f, double param);

/// One exact draw on standard exponential margins. Not available for
/// gauge_model12, whose margins are only exponential after an empirical PIT.
std::pair<double, double> draw_exponential_pair(Family f, double param, double kappa1, double kappa2, Rng& rng);

/// Exact i.i.d. draw from the density proportional to exp(-g) with the
/// gauge g(x,y) = max{(x-y)/c, (y-x)/c, (x+y)/(2-c)}, on its raw scale.
std::pair<double, double> draw_gauge_raw(double c, Rng& rng);
double gauge_function(double x, double y, double c);

/// Non-stationary sample. gauge_model12 needs mcmc; the other families ignore it.
ExpSeries sample(const CopulaSpec& spec,
                 const std::optional<McmcConfig>& mcmc = std::nullopt,
                 McmcDiagnostics* diagnostics = nullptr);

/// N i.i.d. pairs at a fixed parameter on exponential margins (gauge via the
/// exact sampler and an empirical PIT).
ExpSeries sample_frozen(Family f, double param, std::size_t n, std::uint64_t seed, double kappa1 = 0.3, double kappa2 = 0.7);

/// Replace each column by -log(1 - rank/(n+1)).
void empirical_exponential(std::vector<double>& values);

/// Raw-scale marginal reference for gauge_model12 series. A non-stationary
/// gauge sample is put on exponential margins with its pooled empirical
/// margins, which mix the raw marginals over the whole trajectory; exact draws
/// at one time must go through the same pooled transform to be comparable.
struct PooledMargins
{
  std::vector<double> x; // sorted
  std::vector<double> y; // sorted

  double to_exponential_x(double raw) const;
  double to_exponential_y(double raw) const;
};

/// Pools `size` exact raw draws spread evenly over the trajectory of spec.
PooledMargins gauge_pooled_margins(const CopulaSpec& spec, std::size_t size = 1000000, std::uint64_t seed = 7);

/// n i.i.d. pairs from the data-generating distribution of spec at time t, on
/// the same exponential scale as sample(spec): exact for the copula families,
/// via the pooled transform for gauge_model12 (built here when pooled is null).
ExpSeries sample_at_time(const CopulaSpec& spec,
                         double t,
                         std::size_t n,
                         std::uint64_t seed,
                         const PooledMargins* pooled = nullptr);

double true_adf(Family f, double param, double w, double kappa1 = 0.3, double kappa2 = 0.7);

/// Pr(X > x, Y > y) on exponential margins for the inverted extreme-value
/// families, exp(-(x+y) lambda(x/(x+y))).
double inverted_ev_joint_survival(Family f, double param, double x, double y, double kappa1 = 0.3, double kappa2 = 0.7);

struct HillEstimate
{
  double lambda = 0.0;
  double se = 0.0;
  std::size_t exceedances = 0;
};

double min_projection(double x, double y, double w);

/// Reciprocal mean excess of min-projections above their empirical
/// q-quantile.
HillEstimate hill_adf(std::span<const double> x, std::span<const double> y, double w, double q);

HillEstimate oracle_adf_mc(Family f,
                           double param,
                           double w,
                           std::size_t n,
                           double q,
                           std::uint64_t seed,
                           double kappa1 = 0.3,
                           double kappa2 = 0.7);

using PairSampler = std::function<std::pair<double, double>(Rng&)>;

/// Same estimator over N draws of an arbitrary sampler on exponential margins.
HillEstimate oracle_adf_mc(const PairSampler& sampler, double w, std::size_t n, double q, std::uint64_t seed);

} // namespace nsadf
