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

#include "nsadf/margins.hpp"

#include "nsadf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace nsadf {

namespace {

bool has_intercept(const Eigen::MatrixXd& z)
{
  return z.cols() > 0 && (z.col(0).array() == 1.0).all();
}

struct ScaledDesign
{
  Eigen::MatrixXd z;
  Eigen::VectorXd scale;
};

ScaledDesign scale_columns(const Eigen::MatrixXd& z)
{
  ScaledDesign out{z, Eigen::VectorXd::Ones(z.cols())};
  for (Eigen::Index j = 1; j < z.cols(); ++j) {
    const double s = z.col(j).cwiseAbs().maxCoeff();
    if (s > 0.0) {
      out.scale[j] = s;
      out.z.col(j) /= s;
    }
  }
  return out;
}

Eigen::MatrixXd penalty_matrix(Eigen::Index p, double lambda)
{
  Eigen::MatrixXd pm = Eigen::MatrixXd::Identity(p, p) * lambda;
  pm(0, 0) = 0.0;
  return pm;
}

struct FixedPenaltyFit
{
  Eigen::VectorXd beta, gamma;
  Eigen::VectorXd weights; // 1 / sigma^2 at the fit
  double loglik = 0.0;
  double gcv = 0.0;
  bool converged = false;
};

double gamma_objective(const Eigen::MatrixXd& zs,
                       const Eigen::VectorXd& r2,
                       const Eigen::VectorXd& gamma,
                       const Eigen::MatrixXd& pen)
{
  const Eigen::VectorXd eta = zs * gamma;
  double v = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    v += -eta[i] - 0.5 * r2[i] * std::exp(-2.0 * eta[i]);
  return v - 0.5 * gamma.dot(pen * gamma);
}

// GCV weights come from ref_weights when given, so that every penalty is
// scored against the same noise scale.
FixedPenaltyFit fit_fixed(std::span<const double> ys,
                          const Eigen::MatrixXd& zl,
                          const Eigen::MatrixXd& zs,
                          double lambda,
                          const Eigen::VectorXd* ref_weights = nullptr)
{
  const auto n = zl.rows();
  const Eigen::Map<const Eigen::VectorXd> y(ys.data(), n);
  const Eigen::MatrixXd pl = penalty_matrix(zl.cols(), lambda);
  const Eigen::MatrixXd ps = penalty_matrix(zs.cols(), lambda);

  FixedPenaltyFit f;
  f.beta = (zl.transpose() * zl + pl).ldlt().solve(zl.transpose() * y);
  Eigen::VectorXd r = y - zl * f.beta;
  const double var0 = r.squaredNorm() / static_cast<double>(n);
  const double yscale = std::max(1.0, y.cwiseAbs().maxCoeff());
  if (!(var0 > 1e-24 * yscale * yscale))
    throw NumericalError("margins", "zero residual variance in location-scale fit");
  f.gamma = Eigen::VectorXd::Zero(zs.cols());
  f.gamma[0] = 0.5 * std::log(var0);

  Eigen::VectorXd w(n), r2(n);
  double last = -std::numeric_limits<double>::infinity();
  for (int outer = 0; outer < 500; ++outer) {
    w = (-2.0 * (zs * f.gamma)).array().exp();
    const Eigen::MatrixXd zw = zl.transpose() * w.asDiagonal();
    f.beta = (zw * zl + pl).ldlt().solve(zw * y);
    r = y - zl * f.beta;
    r2 = r.array().square();

    for (int it = 0; it < 30; ++it) {
      const Eigen::VectorXd e = (r2.array() * (-2.0 * (zs * f.gamma)).array().exp()).matrix();
      const Eigen::VectorXd grad = zs.transpose() * (e.array() - 1.0).matrix() - ps * f.gamma;
      const Eigen::MatrixXd hess = -2.0 * (zs.transpose() * e.asDiagonal() * zs) - ps;
      const Eigen::VectorXd step = hess.ldlt().solve(-grad);
      const double cur = gamma_objective(zs, r2, f.gamma, ps);
      double sc = 1.0;
      Eigen::VectorXd cand = f.gamma;
      for (int k = 0; k < 40; ++k) {
        cand = f.gamma + sc * step;
        if (gamma_objective(zs, r2, cand, ps) >= cur)
          break;
        sc *= 0.5;
      }
      f.gamma = cand;
      if (grad.norm() < 1e-10 * std::max(1.0, static_cast<double>(n)))
        break;
    }

    const Eigen::VectorXd eta = zs * f.gamma;
    double obj = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      obj += -eta[i] - 0.5 * r2[i] * std::exp(-2.0 * eta[i]);
    obj -= 0.5 * (f.beta.dot(pl * f.beta) + f.gamma.dot(ps * f.gamma));
    if (std::abs(obj - last) <= 1e-13 * (1.0 + std::abs(obj))) {
      f.converged = true;
      last = obj;
      break;
    }
    last = obj;
  }

  const Eigen::VectorXd eta = zs * f.gamma;
  w = (-2.0 * eta).array().exp();
  f.weights = w;
  f.loglik = -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  for (Eigen::Index i = 0; i < n; ++i)
    f.loglik += -eta[i] - 0.5 * r2[i] * w[i];

  const Eigen::VectorXd& wg = ref_weights ? *ref_weights : w;
  const Eigen::MatrixXd zwz = zl.transpose() * w.asDiagonal() * zl;
  const double trace = (zwz + pl).ldlt().solve(zwz).trace();
  const double rss = (r2.array() * wg.array()).sum();
  const double dn = static_cast<double>(n);
  f.gcv = dn * rss / ((dn - trace) * (dn - trace));
  return f;
}

} // namespace

std::vector<double> gcv_penalty_grid(std::size_t n)
{
  std::vector<double> grid(20);
  for (int k = 0; k < 20; ++k)
    grid[static_cast<std::size_t>(k)] = static_cast<double>(n) * std::pow(10.0, -8.0 + 9.0 * k / 19.0);
  return grid;
}

LocScaleFit locscale_fit(std::span<const double> y,
                         const Eigen::MatrixXd& loc_design,
                         const Eigen::MatrixXd& scale_design,
                         std::optional<double> penalty)
{
  const auto n = static_cast<Eigen::Index>(y.size());
  if (loc_design.rows() != n || scale_design.rows() != n)
    throw InvalidArgument("locscale_fit: design rows do not match the series");
  if (!has_intercept(loc_design) || !has_intercept(scale_design))
    throw InvalidArgument("locscale_fit: designs need an intercept in column 0");
  if (penalty && !(*penalty >= 0.0))
    throw InvalidArgument("locscale_fit: penalty must be nonnegative");
  for (double v : y)
    if (!std::isfinite(v))
      throw InvalidArgument("locscale_fit: series contains non-finite values");
  if (n <= std::max(loc_design.cols(), scale_design.cols()))
    throw InvalidArgument("locscale_fit: too few observations for the basis");

  const ScaledDesign zl = scale_columns(loc_design);
  const ScaledDesign zs = scale_columns(scale_design);
  for (const auto* d : {&zl.z, &zs.z}) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(*d);
    qr.setThreshold(1e-10);
    if (qr.rank() < d->cols())
      throw NumericalError("margins", "location-scale design matrix is singular");
  }

  FixedPenaltyFit best;
  double best_lambda = 0.0;
  if (penalty) {
    best = fit_fixed(y, zl.z, zs.z, *penalty);
    best_lambda = *penalty;
  } else {
    const std::vector<double> grid = gcv_penalty_grid(y.size());
    const Eigen::VectorXd ref = fit_fixed(y, zl.z, zs.z, grid.front()).weights;
    bool first = true;
    for (double lambda : grid) {
      FixedPenaltyFit f = fit_fixed(y, zl.z, zs.z, lambda, &ref);
      if (first || f.gcv < best.gcv) {
        best = std::move(f);
        best_lambda = lambda;
        first = false;
      }
    }
  }

  LocScaleFit out;
  out.loc_coeffs = best.beta.cwiseQuotient(zl.scale);
  out.scale_coeffs = best.gamma.cwiseQuotient(zs.scale);
  out.penalty = best_lambda;
  out.loglik = best.loglik;
  out.converged = best.converged;
  return out;
}

void MarginalModel::finalize()
{
  if (residual_sample.empty())
    throw InvalidArgument("marginal model has no residual sample");
  if (!std::is_sorted(residual_sample.begin(), residual_sample.end()))
    throw InvalidArgument("marginal model residual sample must be sorted");
  const double n1 = static_cast<double>(residual_sample.size()) + 1.0;
  knot_r_.clear();
  knot_p_.clear();
  std::size_t i = 0;
  while (i < residual_sample.size()) {
    std::size_t j = i;
    while (j + 1 < residual_sample.size() && residual_sample[j + 1] == residual_sample[i])
      ++j;
    // ranks i+1 .. j+1 share the value; use their average
    knot_r_.push_back(residual_sample[i]);
    knot_p_.push_back(0.5 * static_cast<double>(i + j + 2) / n1);
    i = j + 1;
  }
}

double MarginalModel::mu(double t, double day) const
{
  return loc_basis.row(t, day).dot(loc_coeffs);
}

double MarginalModel::sigma(double t, double day) const
{
  return std::exp(scale_basis.row(t, day).dot(scale_coeffs));
}

double MarginalModel::tail_scale(double t, double day) const
{
  return tail.tau_at(tail_basis.row(t, day));
}

double MarginalModel::residual(double value, double t, double day) const
{
  return (value - mu(t, day)) / sigma(t, day);
}

double MarginalModel::from_residual(double r, double t, double day) const
{
  return mu(t, day) + sigma(t, day) * r;
}

double MarginalModel::body_cdf(double r) const
{
  if (r <= knot_r_.front())
    return knot_p_.front();
  if (r >= knot_r_.back())
    return knot_p_.back();
  const auto it = std::upper_bound(knot_r_.begin(), knot_r_.end(), r);
  const auto k = static_cast<std::size_t>(it - knot_r_.begin());
  const double f = (r - knot_r_[k - 1]) / (knot_r_[k] - knot_r_[k - 1]);
  return knot_p_[k - 1] + f * (knot_p_[k] - knot_p_[k - 1]);
}

MarginQuantile MarginalModel::body_quantile(double p) const
{
  if (p <= knot_p_.front())
    return {knot_r_.front(), p < knot_p_.front()};
  if (p >= knot_p_.back())
    return {knot_r_.back(), p > knot_p_.back()};
  const auto it = std::upper_bound(knot_p_.begin(), knot_p_.end(), p);
  const auto k = static_cast<std::size_t>(it - knot_p_.begin());
  const double f = (p - knot_p_[k - 1]) / (knot_p_[k] - knot_p_[k - 1]);
  return {knot_r_[k - 1] + f * (knot_r_[k] - knot_r_[k - 1]), false};
}

double MarginalModel::cdf(double r, double t, double day) const
{
  const double u = tail.threshold;
  if (r > u) {
    const double q = tail.threshold_quantile;
    return 1.0 - (1.0 - q) * gpd_sf(r - u, tail_scale(t, day), tail.xi);
  }
  return body_cdf(r);
}

double MarginalModel::exponential(double r, double t, double day) const
{
  const double u = tail.threshold;
  if (r > u) {
    const double q = tail.threshold_quantile;
    const double tau = tail_scale(t, day);
    double x = r - u;
    if (tail.xi < 0.0)
      x = std::min(x, gpd_upper_endpoint(tau, tail.xi) * (1.0 - 1e-12));
    return -std::log1p(-q) - std::log(gpd_sf(x, tau, tail.xi));
  }
  return -std::log1p(-body_cdf(r));
}

MarginQuantile MarginalModel::quantile(double p, double t, double day) const
{
  if (!(p > 0.0 && p < 1.0))
    throw InvalidArgument("semi-empirical quantile: probability must lie in (0,1)");
  const double q = tail.threshold_quantile;
  if (p > q)
    return from_exponential(-std::log1p(-p), t, day);
  return body_quantile(p);
}

MarginQuantile MarginalModel::from_exponential(double v, double t, double day) const
{
  if (!(v >= 0.0) || std::isnan(v))
    throw InvalidArgument("exponential-scale value must be nonnegative");
  const double q = tail.threshold_quantile;
  const double vq = -std::log1p(-q);
  if (v > vq) {
    const double tau = tail_scale(t, day);
    const double xi = tail.xi;
    const double l = v - vq; // -log of the conditional tail survival
    double x;
    if (std::abs(xi) < gpd_xi_eps)
      x = tau * l * (1.0 + 0.5 * xi * l);
    else
      x = tau * std::expm1(xi * l) / xi;
    bool clamped = false;
    if (xi < 0.0) {
      const double end = gpd_upper_endpoint(tau, xi);
      if (!(x < end * (1.0 - 1e-12))) {
        x = end;
        clamped = true;
      }
    }
    return {tail.threshold + x, clamped};
  }
  return body_quantile(-std::expm1(-v));
}

MarginalModel fit_margin(std::span<const double> values,
                         std::span<const double> t,
                         std::span<const double> day,
                         const MarginOptions& options)
{
  if (values.size() != t.size() || (!day.empty() && day.size() != t.size()))
    throw InvalidArgument("fit_margin: series and covariates differ in length");
  if (!(options.threshold_quantile > 0.0 && options.threshold_quantile < 1.0))
    throw InvalidArgument("fit_margin: threshold quantile must lie in (0,1)");
  options.loc_basis.validate();
  options.scale_basis.validate();
  options.tail_basis.validate();
  if (!options.loc_basis.intercept || !options.scale_basis.intercept)
    throw InvalidArgument("fit_margin: location and scale bases need an intercept");

  MarginalModel m;
  m.loc_basis = options.loc_basis;
  m.scale_basis = options.scale_basis;
  m.tail_basis = options.tail_basis;
  const LocScaleFit ls =
    locscale_fit(values, m.loc_basis.design(t, day), m.scale_basis.design(t, day), options.penalty);
  m.loc_coeffs = ls.loc_coeffs;
  m.scale_coeffs = ls.scale_coeffs;
  m.penalty = ls.penalty;

  const std::vector<double> r = residuals(values, t, day, m);
  m.residual_sample = r;
  std::sort(m.residual_sample.begin(), m.residual_sample.end());
  m.finalize();

  const double u = m.body_quantile(options.threshold_quantile).value;
  std::vector<double> ex, te, de;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] > u) {
      ex.push_back(r[i] - u);
      te.push_back(t[i]);
      de.push_back(day.empty() ? 0.0 : day[i]);
    }
  }
  m.tail = gpd_fit_ns(ex, m.tail_basis.design(te, de));
  m.tail.threshold = u;
  m.tail.threshold_quantile = options.threshold_quantile;
  return m;
}

std::vector<double> residuals(std::span<const double> values,
                              std::span<const double> t,
                              std::span<const double> day,
                              const MarginalModel& model)
{
  if (values.size() != t.size() || (!day.empty() && day.size() != t.size()))
    throw InvalidArgument("residuals: series and covariates differ in length");
  std::vector<double> r(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    r[i] = model.residual(values[i], t[i], day.empty() ? 0.0 : day[i]);
  return r;
}

void RawSeries::validate() const
{
  const std::size_t n = x.size();
  if (n == 0)
    throw InvalidArgument("series is empty");
  if (y.size() != n || t.size() != n || (!day.empty() && day.size() != n))
    throw InvalidArgument("series columns have different lengths");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]) || !std::isfinite(t[i]))
      throw InvalidArgument("series contains non-finite values");
    if (i > 0 && !(t[i] > t[i - 1]))
      throw InvalidArgument("series time index is not strictly increasing");
  }
}

ExpSeries to_exponential(const RawSeries& raw, const MarginalModel& mx, const MarginalModel& my)
{
  raw.validate();
  ExpSeries out;
  out.t = raw.t;
  out.day = raw.day;
  out.x.resize(raw.size());
  out.y.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double d = raw.day_at(i);
    out.x[i] = mx.exponential(mx.residual(raw.x[i], raw.t[i], d), raw.t[i], d);
    out.y[i] = my.exponential(my.residual(raw.y[i], raw.t[i], d), raw.t[i], d);
  }
  return out;
}

} // namespace nsadf
