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

#include "nsadf/basis.hpp"
#include "nsadf/gpd.hpp"
#include "nsadf/series.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace nsadf {

struct LocScaleFit
{
  Eigen::VectorXd loc_coeffs;
  Eigen::VectorXd scale_coeffs;
  double penalty = 0.0;
  double loglik = 0.0;
  bool converged = false;
};

/// Gaussian likelihood fit of y = mu(z) + sigma(z) R with mu = Z_loc beta and
/// log sigma = Z_scale gamma. Both designs need an intercept in column 0, which
/// is never penalised. penalty = nullopt selects the ridge weight by GCV over
/// 20 log-spaced values.
LocScaleFit locscale_fit(std::span<const double> y,
                         const Eigen::MatrixXd& loc_design,
                         const Eigen::MatrixXd& scale_design,
                         std::optional<double> penalty = std::nullopt);

/// Penalty grid searched by GCV for a series of length n.
std::vector<double> gcv_penalty_grid(std::size_t n);

struct MarginOptions
{
  BasisSpec loc_basis = BasisSpec::constant();
  BasisSpec scale_basis = BasisSpec::constant();
  BasisSpec tail_basis = BasisSpec::constant();
  std::optional<double> penalty;
  double threshold_quantile = 0.9;
};

/// Value of a semi-empirical quantile lookup; clamped is set when a bounded
/// tail (xi < 0) or the bottom of the sample cut the answer off.
struct MarginQuantile
{
  double value = 0.0;
  bool clamped = false;
};

class MarginalModel
{
public:
  BasisSpec loc_basis;
  BasisSpec scale_basis;
  BasisSpec tail_basis;
  Eigen::VectorXd loc_coeffs;
  Eigen::VectorXd scale_coeffs;
  double penalty = 0.0;
  NsGpdParams tail; // threshold u_Y and q_Y live on the residual scale
  std::vector<double> residual_sample; // sorted

  /// Rebuilds the body-CDF knots from residual_sample; call after filling the
  /// public fields by hand (deserialisation does this).
  void finalize();

  double mu(double t, double day) const;
  double sigma(double t, double day) const;
  double tail_scale(double t, double day) const;
  double residual(double value, double t, double day) const;
  double from_residual(double r, double t, double day) const;

  /// Semi-empirical CDF of a residual at covariates (t, day).
  double cdf(double r, double t, double day) const;
  /// -log(1 - cdf), evaluated without cancellation in the tail.
  double exponential(double r, double t, double day) const;
  MarginQuantile quantile(double p, double t, double day) const;
  /// Inverse of exponential(): residual whose exponential-scale value is v.
  MarginQuantile from_exponential(double v, double t, double day) const;

  /// Empirical branch on its own: linear interpolation between the
  /// average-rank points (r_(i), rank/(n+1)), flat outside the sample range.
  double body_cdf(double r) const;
  MarginQuantile body_quantile(double p) const;

  double threshold() const { return tail.threshold; }
  double threshold_quantile() const { return tail.threshold_quantile; }
  std::size_t n() const { return residual_sample.size(); }

private:
  std::vector<double> knot_r_; // unique sorted residuals
  std::vector<double> knot_p_; // average rank / (n + 1)
};

MarginalModel fit_margin(std::span<const double> values,
                         std::span<const double> t,
                         std::span<const double> day,
                         const MarginOptions& options);

std::vector<double> residuals(std::span<const double> values,
                              std::span<const double> t,
                              std::span<const double> day,
                              const MarginalModel& model);

/// Raw paired series (original scale) with time and optional day covariates.
struct RawSeries
{
  std::vector<double> t;
  std::vector<double> day;
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const { return x.size(); }
  double day_at(std::size_t i) const { return day.empty() ? 0.0 : day[i]; }
  void validate() const;
};

ExpSeries to_exponential(const RawSeries& raw, const MarginalModel& mx, const MarginalModel& my);

} // namespace nsadf
