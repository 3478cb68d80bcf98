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
#include "nsadf/margins.hpp"

#include <span>
#include <vector>

namespace nsadf {

enum class Margin
{
  exponential,
  original,
};

struct CurvePoint
{
  double w = 0.0;
  double x = 0.0;
  double y = 0.0;
  /// Set by back_transform when a bounded tail clamped either coordinate.
  bool clamped = false;
};

struct ReturnCurve
{
  double p = 0.0;
  double t = 0.0;
  double day = 0.0;
  Margin margin = Margin::exponential;
  std::vector<CurvePoint> points;

  /// x nondecreasing and y nonincreasing along the rays.
  bool ordered() const;
};

/// Bounded ADF values over the grid's rays at one time.
std::vector<double> lambda_star(const BernsteinModel& model, const RayGrid& grid, double t, double day = 0.0);
std::vector<double> lambda_star(const AdfGrid& grid, std::size_t time_index);

/// Curve from one quantile pair: along ray w the point is (w s, (1-w) s) with
/// s = u_{w,t} + r and r = -log(p / (1 - q1)) / lambda*(w).
ReturnCurve exp_curve(const AdfGrid& thresholds,
                      std::span<const double> lambda_star,
                      double p,
                      std::size_t pair,
                      double t,
                      double day = 0.0);

/// Ray-wise mean of the curves.
ReturnCurve average_curves(std::span<const ReturnCurve> curves);

/// exp_curve for every pair of the schedule, averaged.
ReturnCurve exp_curve_averaged(const AdfGrid& thresholds,
                               std::span<const double> lambda_star,
                               double p,
                               double t,
                               double day = 0.0);

/// L2 isotonic projection of x (nondecreasing) and y (nonincreasing) over the
/// interior rays, with the end points held fixed.
ReturnCurve enforce_ordering(ReturnCurve curve);

/// Maps an exponential-margin curve to the original scale at covariates
/// (curve.t, curve.day).
ReturnCurve back_transform(const ReturnCurve& curve, const MarginalModel& mx, const MarginalModel& my);

/// Pool-adjacent-violators fit of a nondecreasing sequence (unit weights).
std::vector<double> isotonic_increasing(std::span<const double> values);

} // namespace nsadf
