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

#include "nsadf/gpd.hpp"

#include "nsadf/error.hpp"
#include "nsadf/optim.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nsadf {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// ((1+e) log(1+e) - e) / e^2, stable near e = 0.
double h_series(double e)
{
  if (std::abs(e) < 1e-3)
    return 0.5 - e / 6.0 + e * e / 12.0 - e * e * e / 20.0;
  return ((1.0 + e) * std::log1p(e) - e) / (e * e);
}

// log(1 + xi*y) / xi with its xi -> 0 limit.
double log1p_over(double xi, double y)
{
  const double e = xi * y;
  if (std::abs(e) < 1e-8)
    return y * (1.0 - 0.5 * e);
  return std::log1p(e) / xi;
}

void check_tau(double tau)
{
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw InvalidArgument("GPD scale must be positive");
}

struct ExcessStats
{
  double mean = 0.0;
  double var = 0.0;
  double max = 0.0;
};

ExcessStats validate_excesses(std::span<const double> ex)
{
  if (ex.size() < 10)
    throw InvalidArgument("GPD fit needs at least 10 excesses");
  ExcessStats s;
  for (double x : ex) {
    if (!std::isfinite(x) || x < 0.0)
      throw InvalidArgument("GPD excesses must be finite and nonnegative");
    s.mean += x;
    s.max = std::max(s.max, x);
  }
  s.mean /= static_cast<double>(ex.size());
  for (double x : ex)
    s.var += (x - s.mean) * (x - s.mean);
  s.var /= static_cast<double>(ex.size());
  if (!(s.var > 1e-24 * std::max(1.0, s.mean * s.mean)))
    throw InvalidArgument("GPD fit: degenerate sample (all excesses equal)");
  return s;
}

// Profile: for fixed xi, maximise over log tau. Feasibility for xi < 0 needs
// tau > -xi * max.
double profile_tau(std::span<const double> ex, double xi, const ExcessStats& s, double& best_ll)
{
  double lo = std::log(s.mean) - 6.0, hi = std::log(s.mean) + 6.0;
  if (xi < 0.0)
    lo = std::max(lo, std::log(-xi * s.max) + 1e-12);
  if (!(lo < hi)) {
    best_ll = neg_inf;
    return std::exp(hi);
  }
  auto negll = [&](double lt) {
    const double v = gpd_loglik(ex, std::exp(lt), xi);
    return std::isfinite(v) ? -v : std::numeric_limits<double>::max();
  };
  const auto r = boost::math::tools::brent_find_minima(negll, lo, hi, 50);
  best_ll = -r.second;
  return std::exp(r.first);
}

// Newton on the score with a finite-difference Hessian and step halving.
template <class Loglik, class Score>
bool newton_polish(Eigen::VectorXd& theta, const Loglik& ll, const Score& score, int max_iter = 50)
{
  const auto d = theta.size();
  double cur = ll(theta);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd g = score(theta);
    if (!g.allFinite())
      return false;
    if (g.norm() < 1e-9 * std::max(1.0, std::abs(cur)))
      return true;
    Eigen::MatrixXd h(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double eps = 1e-6 * std::max(1.0, std::abs(theta[j]));
      Eigen::VectorXd tp = theta, tm = theta;
      tp[j] += eps;
      tm[j] -= eps;
      h.col(j) = (score(tp) - score(tm)) / (2.0 * eps);
    }
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::VectorXd stepv = h.ldlt().solve(-g);
    if (!stepv.allFinite() || g.dot(stepv) <= 0.0)
      stepv = g / std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    double scale = 1.0;
    bool moved = false;
    for (int k = 0; k < 40; ++k) {
      const Eigen::VectorXd cand = theta + scale * stepv;
      const double v = ll(cand);
      if (std::isfinite(v) && v >= cur - 1e-12 * std::abs(cur)) {
        moved = v > cur || (scale * stepv).norm() > 0.0;
        theta = cand;
        cur = std::max(v, cur);
        break;
      }
      scale *= 0.5;
    }
    if (!moved)
      return g.norm() < 1e-6 * std::max(1.0, std::abs(cur));
  }
  return score(theta).norm() < 1e-6 * std::max(1.0, std::abs(cur));
}

} // namespace

double NsGpdParams::tau_at(const Eigen::Ref<const Eigen::VectorXd>& z) const
{
  if (z.size() != tau_coeffs.size())
    throw InvalidArgument("tail scale: covariate row has the wrong length");
  return std::exp(z.dot(tau_coeffs));
}

double gpd_sf(double x, double tau, double xi)
{
  check_tau(tau);
  if (x <= 0.0)
    return 1.0;
  const double y = x / tau;
  if (std::abs(xi) < gpd_xi_eps)
    return std::exp(-y * (1.0 - 0.5 * xi * y));
  const double a = 1.0 + xi * y;
  if (a <= 0.0)
    return 0.0;
  return std::exp(-std::log1p(xi * y) / xi);
}

double gpd_cdf(double x, const GpdParams& params)
{
  check_tau(params.tau);
  if (x <= 0.0)
    return 0.0;
  const double y = x / params.tau;
  if (std::abs(params.xi) < gpd_xi_eps)
    return -std::expm1(-y * (1.0 - 0.5 * params.xi * y));
  if (1.0 + params.xi * y <= 0.0)
    return 1.0;
  return -std::expm1(-std::log1p(params.xi * y) / params.xi);
}

double gpd_logpdf(double x, double tau, double xi)
{
  check_tau(tau);
  if (x < 0.0)
    return neg_inf;
  const double y = x / tau;
  const double a = 1.0 + xi * y;
  if (a <= 0.0)
    return neg_inf;
  return -std::log(tau) - (1.0 + xi) * log1p_over(xi, y);
}

double gpd_upper_endpoint(double tau, double xi)
{
  check_tau(tau);
  return xi < 0.0 ? -tau / xi : std::numeric_limits<double>::infinity();
}

double gpd_quantile_sf(double s, double tau, double xi)
{
  check_tau(tau);
  if (!(s > 0.0 && s <= 1.0))
    throw InvalidArgument("GPD quantile: survival probability must lie in (0,1]");
  const double ls = -std::log(s); // > 0
  if (std::abs(xi) < gpd_xi_eps)
    return tau * ls * (1.0 + 0.5 * xi * ls);
  const double x = tau * std::expm1(xi * ls) / xi;
  return xi < 0.0 ? std::min(x, -tau / xi) : x;
}

double gpd_loglik(std::span<const double> ex, double tau, double xi)
{
  if (!(tau > 0.0) || !std::isfinite(tau) || !std::isfinite(xi))
    return neg_inf;
  double ll = -static_cast<double>(ex.size()) * std::log(tau);
  for (double x : ex) {
    const double y = x / tau;
    if (1.0 + xi * y <= 0.0)
      return neg_inf;
    ll -= (1.0 + xi) * log1p_over(xi, y);
  }
  return ll;
}

Eigen::Vector2d gpd_score(std::span<const double> ex, double tau, double xi)
{
  double gt = -static_cast<double>(ex.size()) / tau;
  double gx = 0.0;
  for (double x : ex) {
    const double y = x / tau;
    const double a = 1.0 + xi * y;
    gt += (1.0 + xi) * y / (tau * a);
    // d/dxi of -(1+1/xi) log(1+xi y) = y^2 h(xi y)/a - y/a
    gx += (y * y * h_series(xi * y) - y) / a;
  }
  return {gt, gx};
}

GpdParams gpd_fit(std::span<const double> ex)
{
  const ExcessStats s = validate_excesses(ex);

  // Coarse profile over xi, then a local simplex polish from the best point.
  double best_ll = neg_inf, best_tau = s.mean, best_xi = 0.0;
  for (int k = 0; k <= 48; ++k) {
    const double xi = -0.9 + 0.05 * k;
    double ll = neg_inf;
    const double tau = profile_tau(ex, xi, s, ll);
    if (ll > best_ll) {
      best_ll = ll;
      best_tau = tau;
      best_xi = xi;
    }
  }

  auto negll = [&](const std::vector<double>& v) {
    if (v[1] <= -1.0)
      return std::numeric_limits<double>::infinity();
    return -gpd_loglik(ex, std::exp(v[0]), v[1]);
  };
  NelderMeadOptions nmo;
  nmo.max_evals = 4000;
  nmo.f_tol = 1e-12;
  nmo.x_tol = 1e-10;
  const auto nm = nelder_mead(negll, {std::log(best_tau), best_xi}, {0.05, 0.02}, nmo);

  Eigen::VectorXd theta(2);
  theta << std::exp(nm.x[0]), nm.x[1];
  if (-nm.f < best_ll) {
    theta << best_tau, best_xi;
  }
  auto ll = [&](const Eigen::VectorXd& th) { return th[1] > -1.0 ? gpd_loglik(ex, th[0], th[1]) : neg_inf; };
  auto sc = [&](const Eigen::VectorXd& th) -> Eigen::VectorXd { return gpd_score(ex, th[0], th[1]); };
  const bool ok = newton_polish(theta, ll, sc);

  GpdParams out;
  out.tau = theta[0];
  out.xi = theta[1];
  out.loglik = gpd_loglik(ex, out.tau, out.xi);
  out.converged = ok && std::isfinite(out.loglik) && out.xi > -1.0;
  return out;
}

double gpd_ns_loglik(std::span<const double> ex,
                     const Eigen::MatrixXd& z,
                     const Eigen::VectorXd& alpha,
                     double xi)
{
  if (!alpha.allFinite() || !std::isfinite(xi))
    return neg_inf;
  double ll = 0.0;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const double lt = z.row(static_cast<Eigen::Index>(i)).dot(alpha);
    const double tau = std::exp(lt);
    const double y = ex[i] / tau;
    if (!(tau > 0.0) || 1.0 + xi * y <= 0.0)
      return neg_inf;
    ll -= lt + (1.0 + xi) * log1p_over(xi, y);
  }
  return ll;
}

namespace {

Eigen::VectorXd ns_score(std::span<const double> ex, const Eigen::MatrixXd& z, const Eigen::VectorXd& theta)
{
  const auto p = z.cols();
  const Eigen::VectorXd alpha = theta.head(p);
  const double xi = theta[p];
  Eigen::VectorXd g = Eigen::VectorXd::Zero(p + 1);
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const auto row = z.row(static_cast<Eigen::Index>(i));
    const double tau = std::exp(row.dot(alpha));
    const double y = ex[i] / tau;
    const double a = 1.0 + xi * y;
    // d/d log tau of the per-point log-likelihood
    const double dlt = -1.0 + (1.0 + xi) * y / a;
    g.head(p) += dlt * row.transpose();
    g[p] += (y * y * h_series(xi * y) - y) / a;
  }
  return g;
}

bool is_intercept_only(const Eigen::MatrixXd& z)
{
  return z.cols() == 1 && (z.col(0).array() == 1.0).all();
}

} // namespace

NsGpdParams gpd_fit_ns(std::span<const double> ex, const Eigen::MatrixXd& z)
{
  if (z.cols() == 0)
    throw InvalidArgument("non-stationary GPD: covariate rows are empty");
  if (static_cast<std::size_t>(z.rows()) != ex.size())
    throw InvalidArgument("non-stationary GPD: covariate rows do not match excesses");
  validate_excesses(ex);

  NsGpdParams out;
  if (is_intercept_only(z)) {
    const GpdParams g = gpd_fit(ex);
    out.tau_coeffs = Eigen::VectorXd::Constant(1, std::log(g.tau));
    out.xi = g.xi;
    out.loglik = g.loglik;
    out.converged = g.converged;
    return out;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  qr.setThreshold(1e-10);
  if (qr.rank() < z.cols())
    throw NumericalError("margins", "non-stationary GPD design matrix is singular");

  // Start from the stationary fit spread over the design by least squares.
  const GpdParams g0 = gpd_fit(ex);
  const auto p = z.cols();
  Eigen::VectorXd theta(p + 1);
  theta.head(p) = qr.solve(Eigen::VectorXd::Constant(z.rows(), std::log(g0.tau)));
  theta[p] = g0.xi;

  auto negll = [&](const std::vector<double>& v) {
    if (v.back() <= -1.0)
      return std::numeric_limits<double>::infinity();
    const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(v.data(), p);
    return -gpd_ns_loglik(ex, z, a, v.back());
  };
  // Steps sized to the column scale so every coefficient moves log tau by ~0.05.
  std::vector<double> x0(theta.data(), theta.data() + p + 1), step(static_cast<std::size_t>(p + 1));
  for (Eigen::Index j = 0; j < p; ++j)
    step[static_cast<std::size_t>(j)] = 0.05 / std::max(1e-12, z.col(j).cwiseAbs().maxCoeff());
  step.back() = 0.02;
  NelderMeadOptions nmo;
  nmo.max_evals = 20000;
  nmo.f_tol = 1e-10;
  nmo.x_tol = 1e-12;
  const auto nm = nelder_mead(negll, x0, step, nmo);
  if (std::isfinite(nm.f) && -nm.f > gpd_ns_loglik(ex, z, theta.head(p), theta[p]))
    theta = Eigen::Map<const Eigen::VectorXd>(nm.x.data(), p + 1);

  auto ll = [&](const Eigen::VectorXd& th) {
    return th[p] > -1.0 ? gpd_ns_loglik(ex, z, th.head(p), th[p]) : neg_inf;
  };
  auto sc = [&](const Eigen::VectorXd& th) { return ns_score(ex, z, th); };
  const bool ok = newton_polish(theta, ll, sc);

  out.tau_coeffs = theta.head(p);
  out.xi = theta[p];
  out.loglik = ll(theta);
  out.converged = ok && std::isfinite(out.loglik);
  return out;
}

} // namespace nsadf
