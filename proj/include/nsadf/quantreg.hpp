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
#include <vector>

namespace nsadf {

struct QuantileFit
{
  double q = 0.5;
  Eigen::VectorXd coeffs;
  double achieved_loss = 0.0;
  bool converged = false;
  int pivots = 0;
  /// Rows interpolated exactly at the optimal vertex; reused for warm starts.
  std::vector<int> basis;
};

/// residual * (q - 1{residual < 0}).
inline double check_loss(double residual, double q)
{
  return residual * (q - (residual < 0.0 ? 1.0 : 0.0));
}

double total_check_loss(const Eigen::MatrixXd& design,
                        std::span<const double> response,
                        const Eigen::VectorXd& coeffs,
                        double q);

struct QrOptions
{
  /// Cap on simplex pivots per fit; 0 selects 20 * rows.
  int max_pivots = 0;
  /// IRLS sweeps on the smoothed check loss used to seed the first vertex.
  int irls_iterations = 12;
};

/// Linear quantile regression solved exactly as the check-loss LP.
///
/// A smoothed-loss IRLS pass supplies a starting point; the nearest vertex
/// (p rows interpolated exactly) is then improved by edge pivots with an exact
/// weighted-median line search along each edge until the subgradient
/// optimality conditions hold. The design is column-scaled internally.
class QuantileRegressor
{
public:
  explicit QuantileRegressor(const Eigen::MatrixXd& design, QrOptions options = {});

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return p_; }

  /// warm_basis, when given, seeds the vertex search (e.g. the basis of a
  /// neighbouring quantile level on the same response).
  QuantileFit fit(std::span<const double> response,
                  double q,
                  std::span<const int> warm_basis = {}) const;

  /// Fits every level in qs, warm-starting along ascending q. Results are
  /// returned in the order of qs.
  std::vector<QuantileFit> fit_path(std::span<const double> response,
                                    std::span<const double> qs) const;

private:
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::vector<double> x_;  // row-major, column-scaled
  std::vector<double> xc_; // column-major copy of x_
  Eigen::MatrixXd gram_;    // x_' x_
  double max_leverage_ = 0.0;
  Eigen::VectorXd col_scale_;
  Eigen::MatrixXd design_;
  QrOptions options_;

  std::vector<int> irls_start(std::span<const double> y, double q) const;
  bool pick_independent(const std::vector<int>& order, std::vector<int>& basis) const;
};

QuantileFit fit_quantile(const Eigen::MatrixXd& design,
                         std::span<const double> response,
                         double q,
                         QrOptions options = {});

/// z' coeffs; throws InvalidArgument on dimension mismatch.
double predict_quantile(const QuantileFit& fit, std::span<const double> z);

} // namespace nsadf
