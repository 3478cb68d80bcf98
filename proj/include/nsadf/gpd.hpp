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

#include <Eigen/Dense>

#include <span>

namespace nsadf {

struct GpdParams
{
  double tau = 1.0;
  double xi = 0.0;
  double threshold = 0.0;
  double threshold_quantile = 0.9;
  bool converged = true;
  double loglik = 0.0;
};

/// Covariate-dependent scale: log tau = z' tau_coeffs, shape constant.
struct NsGpdParams
{
  Eigen::VectorXd tau_coeffs;
  double xi = 0.0;
  double threshold = 0.0;
  double threshold_quantile = 0.9;
  bool converged = true;
  double loglik = 0.0;

  double tau_at(const Eigen::Ref<const Eigen::VectorXd>& z) const;
};

// Formulas switch to their xi -> 0 series when |xi| falls below this.
inline constexpr double gpd_xi_eps = 1e-8;

double gpd_cdf(double x, const GpdParams& params);
/// Survival function of the excess; 0 beyond a finite upper endpoint.
double gpd_sf(double x, double tau, double xi);
double gpd_logpdf(double x, double tau, double xi);
/// Excess whose survival probability equals s (s in (0,1]). For xi < 0 the
/// result never exceeds the upper endpoint -tau/xi.
double gpd_quantile_sf(double s, double tau, double xi);
double gpd_upper_endpoint(double tau, double xi);

double gpd_loglik(std::span<const double> excesses, double tau, double xi);
/// Gradient of gpd_loglik with respect to (tau, xi).
Eigen::Vector2d gpd_score(std::span<const double> excesses, double tau, double xi);

/// Maximum likelihood over tau > 0, xi > -1. Throws InvalidArgument for fewer
/// than 10 excesses or a degenerate sample.
GpdParams gpd_fit(std::span<const double> excesses);

double gpd_ns_loglik(std::span<const double> excesses,
                     const Eigen::MatrixXd& covariates,
                     const Eigen::VectorXd& tau_coeffs,
                     double xi);

/// Maximum likelihood for the covariate-scale model. An intercept-only design
/// reproduces gpd_fit exactly.
NsGpdParams gpd_fit_ns(std::span<const double> excesses, const Eigen::MatrixXd& covariates);

} // namespace nsadf
