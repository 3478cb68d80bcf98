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
#include "nsadf/copula.hpp"
#include "nsadf/return_curve.hpp"
#include "nsadf/series.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace nsadf {

/// Trapezoidal integral of (estimate - truth)^2 over the ray grid.
double ise(std::span<const double> estimate, std::span<const double> truth, const RayGrid& grid);
double ise(const std::function<double(double)>& estimate, const std::function<double(double)>& truth, const RayGrid& grid);

/// Replicate estimates of lambda over rays x evaluation times, with the truth.
struct ReplicationSet
{
  RayGrid grid;
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> estimates; // each rays x times
  Eigen::MatrixXd truth;                  // rays x times

  std::size_t replicates() const { return estimates.size(); }
  void validate() const;
  /// Ray profile of replicate r at time column c.
  std::vector<double> profile(std::size_t r, std::size_t c) const;
  std::vector<double> truth_profile(std::size_t c) const;
};

/// Mean over replicates of the ISE at time column c.
double mise(const ReplicationSet& reps, std::size_t c);

struct Envelope
{
  std::vector<double> probs;
  /// bands[k][i]: empirical probs[k]-quantile at point i.
  std::vector<std::vector<double>> bands;
  /// Fewer replicates than 40: tail bands fall back to the sample extremes.
  bool fallback = false;
};

/// Pointwise empirical quantiles across replicates (rows of the input are
/// replicates, each of the same length).
Envelope envelope(std::span<const std::vector<double>> replicates,
                  std::vector<double> probs = {0.025, 0.5, 0.975});

/// Linear-interpolation empirical quantile of values.
double empirical_quantile(std::vector<double> values, double prob);

struct EtaPoint
{
  double t = 0.0;
  double eta = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t window = 0;
  std::size_t exceedances = 0;
  bool sparse = false;
};

/// eta over windows [c - h, c + h]: mean excess of min(X, Y) above its
/// empirical threshold_q quantile in the window, with a normal 95% interval.
/// Centres run over every step-th index.
std::vector<EtaPoint> rolling_eta(const ExpSeries& data,
                                  std::size_t half_window,
                                  double threshold_q = 0.95,
                                  std::size_t step = 1);

struct ChiEstimate
{
  double chi = 0.0;
  std::size_t exceedances = 0;
  /// False when fewer than 50 observations exceed u in the first margin.
  bool sufficient = false;
};

ChiEstimate chi_u(std::span<const double> ux, std::span<const double> uy, double u);

struct BootstrapPlan
{
  std::size_t segment_len = 450;
  std::size_t block_len = 15;
  std::size_t resamples = 250;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Resample number index of the plan: within each segment, aligned blocks
/// are drawn with replacement and concatenated; segments keep their order and
/// time indices are renumbered 1..n.
ExpSeries block_bootstrap(const ExpSeries& data, const BootstrapPlan& plan, std::size_t index);

struct SurvivalCheck
{
  double w = 0.0;
  double prob = 0.0;
  /// Binomial standard error; 3/N (rule of three) when no sample falls
  /// beyond the point.
  double se = 0.0;
  std::size_t count = 0;
};

/// Fraction of the sample with X > x and Y > y for each curve point.
std::vector<SurvivalCheck> curve_check(const ReturnCurve& curve, const ExpSeries& sample, int workers = 0);
std::vector<SurvivalCheck> curve_check(const ReturnCurve& curve,
                                       Family family,
                                       double param,
                                       std::size_t n,
                                       std::uint64_t seed,
                                       int workers = 0);

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> a, std::span<const double> b);

struct ReplicationConfig
{
  CopulaSpec spec;
  int replicates = 50;
  std::uint64_t base_seed = 1;
  /// Evaluation times (1-based).
  std::vector<double> times;
  RayGrid grid = RayGrid::uniform();
  QuantileSchedule schedule = QuantileSchedule::linear();
  AdfOptions adf;
  BernsteinOptions bernstein;
  bool fit_bernstein = true;
  std::optional<McmcConfig> mcmc;
  /// When set, averaged and ordered return curves at this probability are
  /// kept for every replicate and time.
  std::optional<double> curve_p;
  int workers = 0;
};

struct ReplicationResult
{
  ReplicationSet qr; // bounded quantile-regression estimates
  ReplicationSet bp; // bounded Bernstein estimates (empty without fit_bernstein)
  /// curves_*[r][c]: replicate r, time column c.
  std::vector<std::vector<ReturnCurve>> curves_qr;
  std::vector<std::vector<ReturnCurve>> curves_bp;
  std::vector<std::uint64_t> seeds;
};

/// Simulates and fits every replicate; replicates run in parallel, each
/// single-threaded, and results are stored in replicate order.
ReplicationResult run_replications(const ReplicationConfig& config);

/// Ray-wise median of replicate curves (median radial distance along each ray).
ReturnCurve median_curve(std::span<const ReturnCurve> curves);

} // namespace nsadf
