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
#include "nsadf/quantreg.hpp"
#include "nsadf/series.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace nsadf {

struct RayGrid
{
  std::vector<double> rays;

  /// count equally spaced rays from 0 to 1 inclusive.
  static RayGrid uniform(std::size_t count = 101);

  std::size_t size() const { return rays.size(); }
  void validate() const;
};

struct QuantileSchedule
{
  std::vector<std::pair<double, double>> pairs;

  /// m levels q1 equally spaced over [lo, hi] with q2 = q1 + gap.
  static QuantileSchedule linear(int m = 30, double lo = 0.9, double hi = 0.95, double gap = 0.04);

  std::size_t size() const { return pairs.size(); }
  void validate() const;
};

/// -log((1 - q2) / (1 - q1)).
double log_ratio(double q1, double q2);

struct AdfOptions
{
  /// Covariate basis for the quantile regressions. A non-positive
  /// time_scale is replaced by the series length.
  BasisSpec basis = BasisSpec::polynomial(3, 0.0);
  double v_floor = 1e-6;
  QrOptions qr;
  /// 0 uses the OpenMP default; 1 runs the sequential reference loop.
  int workers = 0;
};

/// Pointwise estimates lambda(w | z_t) over rays x time, averaged over the
/// quantile schedule, plus every per-(ray, pair) threshold fit.
struct AdfGrid
{
  RayGrid grid;
  QuantileSchedule schedule;
  BasisSpec basis;
  std::vector<double> t;
  std::vector<double> day;
  /// rays x time
  Eigen::MatrixXd values;
  /// 1 where at least one pair had its spacing floored; such points carry no
  /// weight in the Bernstein objective.
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> floored;
  /// fits_q1[r * m + j], fits_q2[r * m + j]
  std::vector<QuantileFit> fits_q1;
  std::vector<QuantileFit> fits_q2;
  bool bounded = false;
  double v_floor = 1e-6;

  std::size_t rays() const { return grid.size(); }
  std::size_t times() const { return t.size(); }
  std::size_t pairs() const { return schedule.size(); }

  Eigen::VectorXd covariates(std::size_t ti) const;
  /// u_{w,t} from the stored q1 fit of pair j.
  double threshold(std::size_t ray, std::size_t pair, std::size_t ti) const;
  /// Estimate from a single pair, recomputed from the stored fits.
  double pair_lambda(std::size_t ray, std::size_t pair, std::size_t ti, bool* was_floored = nullptr) const;
  /// values averaged over time for each ray.
  std::vector<double> time_average() const;
  std::size_t unconverged_fits() const;
  /// Recomputes values and floored from the stored fits (bounded if set).
  void refresh_values();
  void refresh_ray(std::size_t ray);
};

/// Quantile-regression estimate for one ray and one pair; flags[i] set where
/// the spacing was floored.
std::vector<double> lambda_qr_pointwise(const ExpSeries& data,
                                        double w,
                                        std::pair<double, double> pair,
                                        const AdfOptions& options,
                                        std::vector<std::uint8_t>* flags = nullptr);

AdfGrid lambda_qr_average(const ExpSeries& data,
                          const RayGrid& grid,
                          const QuantileSchedule& schedule,
                          const AdfOptions& options = {});

/// max(lambda, max(w, 1-w)), with the endpoints pinned to 1.
double apply_bounds(double lambda, double w);
AdfGrid apply_bounds(AdfGrid grid);

double eta_from_adf(double lambda_half);

enum class Link
{
  exponential,
  logit,
};

struct BernsteinModel
{
  int degree = 7;
  Link link = Link::exponential;
  BasisSpec basis;
  /// Row i-1 holds psi_i for the interior coefficients i = 1..k-1.
  Eigen::MatrixXd psi;

  /// beta_i(z), including the fixed end coefficients beta_0 = beta_k = 1.
  double beta(int i, std::span<const double> z) const;
  double eval(double w, std::span<const double> z) const;
  double eval(double w, double t, double day = 0.0) const;
  /// eval followed by the lower bound.
  double eval_bounded(double w, double t, double day = 0.0) const;

  void validate() const;
};

/// C(k,i) w^i (1-w)^(k-i) for i = 0..k.
std::vector<double> bernstein_weights(int k, double w);

struct BernsteinOptions
{
  int degree = 7;
  Link link = Link::exponential;
  /// Basis for the coefficient functions; a non-positive time_scale is
  /// replaced by the series length.
  BasisSpec basis = BasisSpec::polynomial(1, 0.0);
  int starts = 5;
  int max_evals = 50000;
  double tolerance = 1e-7;
  /// Time stride of the medium-resolution stage (the multi-start stage uses
  /// four times this and every fourth ray); 0 picks about 100 time points.
  int coarse_stride = 0;
  /// Evaluation budget for the final full-grid polish.
  int polish_evals = 150;
  std::uint64_t seed = 1;
  int workers = 0;
};

struct BernsteinFit
{
  BernsteinModel model;
  double objective = 0.0;
  /// Full-grid objective at each start's initial point.
  std::vector<double> start_objectives;
  bool converged = false;
  int evaluations = 0;
};

/// Mean absolute deviation between the grid and the model over unflagged points.
double bernstein_objective(const AdfGrid& grid, const BernsteinModel& model, int workers = 0);

BernsteinFit fit_bernstein(const AdfGrid& grid, const BernsteinOptions& options = {});

} // namespace nsadf
