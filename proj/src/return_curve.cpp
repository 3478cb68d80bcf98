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

#include "nsadf/return_curve.hpp"

#include "nsadf/error.hpp"

#include <algorithm>
#include <cmath>

namespace nsadf {

bool ReturnCurve::ordered() const
{
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].x < points[i - 1].x || points[i].y > points[i - 1].y)
      return false;
  return true;
}

std::vector<double> lambda_star(const BernsteinModel& model, const RayGrid& grid, double t, double day)
{
  std::vector<double> out(grid.size());
  for (std::size_t r = 0; r < grid.size(); ++r)
    out[r] = model.eval_bounded(grid.rays[r], t, day);
  return out;
}

std::vector<double> lambda_star(const AdfGrid& grid, std::size_t time_index)
{
  if (time_index >= grid.times())
    throw InvalidArgument("time index outside the grid");
  std::vector<double> out(grid.rays());
  for (std::size_t r = 0; r < grid.rays(); ++r)
    out[r] = apply_bounds(grid.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(time_index)),
                          grid.grid.rays[r]);
  return out;
}

ReturnCurve exp_curve(const AdfGrid& thresholds,
                      std::span<const double> lambda_star,
                      double p,
                      std::size_t pair,
                      double t,
                      double day)
{
  if (pair >= thresholds.pairs())
    throw InvalidArgument("quantile pair index out of range");
  if (lambda_star.size() != thresholds.rays())
    throw InvalidArgument("one ADF value per ray is required");
  const double q1 = thresholds.schedule.pairs[pair].first;
  if (!(p > 0.0 && p < 1.0 - q1))
    throw InvalidArgument("return-curve probability must lie in (0, 1 - q1)");

  const Eigen::VectorXd z = thresholds.basis.row(t, day);
  const double log_ratio_p = std::log(p / (1.0 - q1));
  ReturnCurve c;
  c.p = p;
  c.t = t;
  c.day = day;
  c.margin = Margin::exponential;
  c.points.resize(thresholds.rays());
  for (std::size_t r = 0; r < thresholds.rays(); ++r) {
    const double w = thresholds.grid.rays[r];
    const double lam = lambda_star[r];
    if (!(lam >= std::max(w, 1.0 - w) - 1e-12) || !std::isfinite(lam))
      throw InvalidArgument("ADF value below the lower bound max(w, 1-w)");
    const double u = z.dot(thresholds.fits_q1[r * thresholds.pairs() + pair].coeffs);
    const double s = u - log_ratio_p / lam;
    c.points[r] = {w, w * s, (1.0 - w) * s, false};
  }
  return c;
}

ReturnCurve average_curves(std::span<const ReturnCurve> curves)
{
  if (curves.empty())
    throw InvalidArgument("no curves to average");
  ReturnCurve out = curves.front();
  const std::size_t nr = out.points.size();
  for (const auto& c : curves) {
    if (c.points.size() != nr)
      throw InvalidArgument("curves have different ray grids");
    for (std::size_t r = 0; r < nr; ++r)
      if (c.points[r].w != out.points[r].w)
        throw InvalidArgument("curves have different ray grids");
  }
  const double m = static_cast<double>(curves.size());
  for (std::size_t r = 0; r < nr; ++r) {
    double sx = 0.0, sy = 0.0;
    bool clamped = false;
    for (const auto& c : curves) {
      sx += c.points[r].x;
      sy += c.points[r].y;
      clamped = clamped || c.points[r].clamped;
    }
    out.points[r].x = sx / m;
    out.points[r].y = sy / m;
    out.points[r].clamped = clamped;
  }
  return out;
}

ReturnCurve exp_curve_averaged(const AdfGrid& thresholds,
                               std::span<const double> lambda_star,
                               double p,
                               double t,
                               double day)
{
  std::vector<ReturnCurve> curves;
  curves.reserve(thresholds.pairs());
  for (std::size_t j = 0; j < thresholds.pairs(); ++j)
    curves.push_back(exp_curve(thresholds, lambda_star, p, j, t, day));
  return average_curves(curves);
}

std::vector<double> isotonic_increasing(std::span<const double> values)
{
  // Blocks of (mean, size) merged while they violate the order.
  std::vector<double> mean;
  std::vector<std::size_t> size;
  for (double v : values) {
    mean.push_back(v);
    size.push_back(1);
    while (mean.size() > 1 && mean[mean.size() - 2] > mean.back()) {
      const std::size_t a = size[size.size() - 2], b = size.back();
      const double merged = (mean[mean.size() - 2] * static_cast<double>(a) + mean.back() * static_cast<double>(b)) /
                            static_cast<double>(a + b);
      mean.pop_back();
      size.pop_back();
      mean.back() = merged;
      size.back() = a + b;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t b = 0; b < mean.size(); ++b)
    out.insert(out.end(), size[b], mean[b]);
  return out;
}

ReturnCurve enforce_ordering(ReturnCurve curve)
{
  const std::size_t n = curve.points.size();
  if (n < 3)
    return curve;
  if (curve.ordered())
    return curve;
  std::vector<double> xs(n - 2), ys(n - 2);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    xs[i - 1] = curve.points[i].x;
    ys[i - 1] = -curve.points[i].y;
  }
  xs = isotonic_increasing(xs);
  ys = isotonic_increasing(ys);
  const double x_lo = curve.points.front().x, x_hi = curve.points.back().x;
  const double y_hi = curve.points.front().y, y_lo = curve.points.back().y;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    // Clipping an isotonic fit to the end values keeps it isotonic and is the
    // projection onto the box-constrained set.
    curve.points[i].x = x_lo <= x_hi ? std::clamp(xs[i - 1], x_lo, x_hi) : xs[i - 1];
    curve.points[i].y = y_lo <= y_hi ? std::clamp(-ys[i - 1], y_lo, y_hi) : -ys[i - 1];
  }
  return curve;
}

ReturnCurve back_transform(const ReturnCurve& curve, const MarginalModel& mx, const MarginalModel& my)
{
  if (curve.margin != Margin::exponential)
    throw InvalidArgument("back_transform expects a curve on exponential margins");
  ReturnCurve out = curve;
  out.margin = Margin::original;
  for (auto& pt : out.points) {
    const MarginQuantile rx = mx.from_exponential(std::max(pt.x, 0.0), curve.t, curve.day);
    const MarginQuantile ry = my.from_exponential(std::max(pt.y, 0.0), curve.t, curve.day);
    pt.x = mx.from_residual(rx.value, curve.t, curve.day);
    pt.y = my.from_residual(ry.value, curve.t, curve.day);
    pt.clamped = pt.clamped || rx.clamped || ry.clamped;
  }
  return out;
}

} // namespace nsadf
