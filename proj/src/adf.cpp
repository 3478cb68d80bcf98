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

#include "nsadf/adf.hpp"

#include "nsadf/copula.hpp"
#include "nsadf/error.hpp"
#include "nsadf/optim.hpp"
#include "nsadf/rng.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace nsadf {

namespace {

int thread_count(int workers)
{
  return workers > 0 ? workers : omp_get_max_threads();
}

// Runs body(i) for i in [0, count); workers == 1 is a plain loop. The first
// exception thrown by any iteration is rethrown after the loop.
template <class Body>
void parallel_for(std::size_t count, int workers, Body&& body)
{
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i)
      body(i);
    return;
  }
  std::exception_ptr error;
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count(workers))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(nsadf_adf_error)
      if (!error)
        error = std::current_exception();
    }
  }
  if (error)
    std::rethrow_exception(error);
}

BasisSpec resolve_basis(BasisSpec b, std::size_t n)
{
  if (!(b.time_scale > 0.0))
    b.time_scale = static_cast<double>(n);
  b.validate();
  return b;
}

double pair_value(const Eigen::VectorXd& z,
                  const Eigen::VectorXd& c1,
                  const Eigen::VectorXd& c2,
                  double lr,
                  double v_floor,
                  bool& floored)
{
  const double v = z.dot(c2) - z.dot(c1);
  floored = !(v >= v_floor);
  return lr / (floored ? v_floor : v);
}

std::vector<double> min_projections(const ExpSeries& data, double w)
{
  std::vector<double> k(data.size());
  for (std::size_t i = 0; i < k.size(); ++i)
    k[i] = min_projection(data.x[i], data.y[i], w);
  return k;
}

} // namespace

RayGrid RayGrid::uniform(std::size_t count)
{
  if (count < 2)
    throw InvalidArgument("ray grid needs at least two rays");
  RayGrid g;
  g.rays.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    g.rays[i] = static_cast<double>(i) / static_cast<double>(count - 1);
  g.rays.back() = 1.0;
  return g;
}

void RayGrid::validate() const
{
  if (rays.size() < 2 || rays.front() != 0.0 || rays.back() != 1.0)
    throw InvalidArgument("ray grid must start at 0 and end at 1");
  for (std::size_t i = 1; i < rays.size(); ++i)
    if (!(rays[i] > rays[i - 1]))
      throw InvalidArgument("ray grid must be strictly increasing");
}

QuantileSchedule QuantileSchedule::linear(int m, double lo, double hi, double gap)
{
  if (m < 1)
    throw InvalidArgument("quantile schedule needs at least one pair");
  QuantileSchedule s;
  for (int j = 0; j < m; ++j) {
    const double q1 = m == 1 ? lo : lo + (hi - lo) * j / (m - 1);
    s.pairs.emplace_back(q1, q1 + gap);
  }
  s.validate();
  return s;
}

void QuantileSchedule::validate() const
{
  if (pairs.empty())
    throw InvalidArgument("quantile schedule is empty");
  for (const auto& [q1, q2] : pairs)
    if (!(q1 > 0.0 && q1 < q2 && q2 < 1.0))
      throw InvalidArgument("quantile pairs must satisfy 0 < q1 < q2 < 1");
}

double log_ratio(double q1, double q2)
{
  return -std::log((1.0 - q2) / (1.0 - q1));
}

Eigen::VectorXd AdfGrid::covariates(std::size_t ti) const
{
  return basis.row(t.at(ti), day.empty() ? 0.0 : day.at(ti));
}

double AdfGrid::threshold(std::size_t ray, std::size_t pair, std::size_t ti) const
{
  return covariates(ti).dot(fits_q1.at(ray * pairs() + pair).coeffs);
}

double AdfGrid::pair_lambda(std::size_t ray, std::size_t pair, std::size_t ti, bool* was_floored) const
{
  const std::size_t m = pairs();
  const auto& [q1, q2] = schedule.pairs.at(pair);
  bool fl = false;
  const double v = pair_value(covariates(ti), fits_q1.at(ray * m + pair).coeffs, fits_q2.at(ray * m + pair).coeffs,
                              log_ratio(q1, q2), v_floor, fl);
  if (was_floored)
    *was_floored = fl;
  return v;
}

std::vector<double> AdfGrid::time_average() const
{
  std::vector<double> avg(rays());
  for (std::size_t r = 0; r < rays(); ++r)
    avg[r] = values.row(static_cast<Eigen::Index>(r)).mean();
  return avg;
}

void AdfGrid::refresh_ray(std::size_t r)
{
  const std::size_t m = pairs();
  const std::size_t n = times();
  std::vector<double> lr(m);
  for (std::size_t j = 0; j < m; ++j)
    lr[j] = log_ratio(schedule.pairs[j].first, schedule.pairs[j].second);
  const auto ri = static_cast<Eigen::Index>(r);
  const double w = grid.rays[r];
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd zi = covariates(i);
    double sum = 0.0;
    bool any = false;
    for (std::size_t j = 0; j < m; ++j) {
      bool fl = false;
      sum += pair_value(zi, fits_q1[r * m + j].coeffs, fits_q2[r * m + j].coeffs, lr[j], v_floor, fl);
      any = any || fl;
    }
    const double v = sum / static_cast<double>(m);
    values(ri, static_cast<Eigen::Index>(i)) = bounded ? apply_bounds(v, w) : v;
    floored(ri, static_cast<Eigen::Index>(i)) = any ? 1 : 0;
  }
}

void AdfGrid::refresh_values()
{
  if (fits_q1.size() != rays() * pairs() || fits_q2.size() != fits_q1.size())
    throw InvalidArgument("ADF grid threshold fits do not match rays x pairs");
  values.resize(static_cast<Eigen::Index>(rays()), static_cast<Eigen::Index>(times()));
  floored.setZero(static_cast<Eigen::Index>(rays()), static_cast<Eigen::Index>(times()));
  for (std::size_t r = 0; r < rays(); ++r)
    refresh_ray(r);
}

std::size_t AdfGrid::unconverged_fits() const
{
  std::size_t c = 0;
  for (const auto& f : fits_q1)
    c += f.converged ? 0 : 1;
  for (const auto& f : fits_q2)
    c += f.converged ? 0 : 1;
  return c;
}

std::vector<double> lambda_qr_pointwise(const ExpSeries& data,
                                        double w,
                                        std::pair<double, double> pair,
                                        const AdfOptions& options,
                                        std::vector<std::uint8_t>* flags)
{
  QuantileSchedule s;
  s.pairs = {pair};
  s.validate();
  RayGrid g;
  g.rays = {w};
  if (!(w >= 0.0 && w <= 1.0))
    throw InvalidArgument("ray must lie in [0,1]");
  data.validate(true);
  const BasisSpec basis = resolve_basis(options.basis, data.size());
  const Eigen::MatrixXd z = basis.design(data.t, data.day);
  const QuantileRegressor qr(z, options.qr);
  const std::vector<double> k = min_projections(data, w);
  const std::vector<double> qs{pair.first, pair.second};
  const auto fits = qr.fit_path(k, qs);
  const double lr = log_ratio(pair.first, pair.second);
  std::vector<double> out(data.size());
  if (flags)
    flags->assign(data.size(), 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    bool fl = false;
    out[i] = pair_value(z.row(static_cast<Eigen::Index>(i)).transpose(), fits[0].coeffs, fits[1].coeffs, lr,
                        options.v_floor, fl);
    if (flags)
      (*flags)[i] = fl ? 1 : 0;
  }
  return out;
}

AdfGrid lambda_qr_average(const ExpSeries& data,
                          const RayGrid& grid,
                          const QuantileSchedule& schedule,
                          const AdfOptions& options)
{
  grid.validate();
  schedule.validate();
  data.validate(true);
  if (!(options.v_floor > 0.0))
    throw InvalidArgument("spacing floor must be positive");

  AdfGrid out;
  out.grid = grid;
  out.schedule = schedule;
  out.basis = resolve_basis(options.basis, data.size());
  out.t = data.t;
  out.day = data.day;
  out.v_floor = options.v_floor;

  const std::size_t n = data.size();
  const std::size_t m = schedule.size();
  const std::size_t nr = grid.size();
  const Eigen::MatrixXd z = out.basis.design(data.t, data.day);
  const QuantileRegressor qr(z, options.qr);

  std::vector<double> qs(2 * m);
  std::vector<double> lr(m);
  for (std::size_t j = 0; j < m; ++j) {
    qs[j] = schedule.pairs[j].first;
    qs[m + j] = schedule.pairs[j].second;
    lr[j] = log_ratio(schedule.pairs[j].first, schedule.pairs[j].second);
  }

  out.values.resize(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(n));
  out.floored.setZero(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(n));
  out.fits_q1.resize(nr * m);
  out.fits_q2.resize(nr * m);

  parallel_for(nr, options.workers, [&](std::size_t r) {
    const std::vector<double> k = min_projections(data, grid.rays[r]);
    auto fits = qr.fit_path(k, qs);
    for (std::size_t j = 0; j < m; ++j) {
      out.fits_q1[r * m + j] = std::move(fits[j]);
      out.fits_q2[r * m + j] = std::move(fits[m + j]);
    }
    out.refresh_ray(r);
  });
  return out;
}

double apply_bounds(double lambda, double w)
{
  if (w <= 0.0 || w >= 1.0)
    return 1.0;
  return std::max(lambda, std::max(w, 1.0 - w));
}

AdfGrid apply_bounds(AdfGrid grid)
{
  for (std::size_t r = 0; r < grid.rays(); ++r) {
    const double w = grid.grid.rays[r];
    auto row = grid.values.row(static_cast<Eigen::Index>(r));
    for (Eigen::Index i = 0; i < row.size(); ++i)
      row(i) = apply_bounds(row(i), w);
  }
  grid.bounded = true;
  return grid;
}

double eta_from_adf(double lambda_half)
{
  if (!(lambda_half > 0.0))
    throw InvalidArgument("lambda(0.5) must be positive");
  return 1.0 / (2.0 * lambda_half);
}

// ---------------------------------------------------------------- Bernstein

namespace {

double link_inverse(Link link, double eta)
{
  if (link == Link::exponential)
    return std::exp(eta);
  return eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
}

double link_forward(Link link, double beta)
{
  if (link == Link::exponential)
    return std::log(std::max(beta, 1e-3));
  beta = std::clamp(beta, 1e-4, 1.0 - 1e-4);
  return std::log(beta / (1.0 - beta));
}

// The Bernstein objective restricted to a subset of time indices. Time is cut
// into fixed blocks whose partial sums are added in order, so the value does
// not depend on the thread count.
class Objective
{
public:
  Objective(const AdfGrid& grid,
            int degree,
            Link link,
            const BasisSpec& basis,
            std::vector<std::size_t> times,
            const std::vector<std::size_t>& rays,
            int workers)
    : k_(degree), link_(link), p_(basis.size()), nr_(rays.size()), times_(std::move(times)), workers_(workers)
  {
    // bw_[i * nr_ + r]: coefficient-major so the ray loop vectorises.
    bw_.resize(nr_ * static_cast<std::size_t>(k_ + 1));
    for (std::size_t r = 0; r < nr_; ++r) {
      const auto b = bernstein_weights(k_, grid.grid.rays[rays[r]]);
      for (int i = 0; i <= k_; ++i)
        bw_[static_cast<std::size_t>(i) * nr_ + r] = b[static_cast<std::size_t>(i)];
    }
    const std::size_t nt = times_.size();
    z_.resize(nt * p_);
    target_.resize(nt * nr_);
    weight_.resize(nt * nr_);
    std::vector<double> zrow(p_);
    for (std::size_t a = 0; a < nt; ++a) {
      const std::size_t ti = times_[a];
      basis.row(grid.t[ti], grid.day.empty() ? 0.0 : grid.day[ti], zrow);
      std::copy(zrow.begin(), zrow.end(), z_.begin() + static_cast<std::ptrdiff_t>(a * p_));
      for (std::size_t r = 0; r < nr_; ++r) {
        const auto ri = static_cast<Eigen::Index>(rays[r]);
        const double v = grid.values(ri, static_cast<Eigen::Index>(ti));
        const bool ok = grid.floored(ri, static_cast<Eigen::Index>(ti)) == 0 &&
                        std::isfinite(v);
        target_[a * nr_ + r] = ok ? v : 0.0;
        weight_[a * nr_ + r] = ok ? 1.0 : 0.0;
        total_weight_ += ok ? 1.0 : 0.0;
      }
    }
    if (total_weight_ == 0.0)
      throw NumericalError("bernstein", "no unflagged grid points to fit");
  }

  double operator()(const std::vector<double>& theta) const
  {
    constexpr std::size_t block = 64;
    const std::size_t nt = times_.size();
    const std::size_t nb = (nt + block - 1) / block;
    std::vector<double> partial(nb, 0.0);
    auto run_block = [&](std::size_t b) {
      std::vector<double> beta(k_ + 1);
      std::vector<double> lam(nr_);
      beta[0] = 1.0;
      beta[k_] = 1.0;
      double acc = 0.0;
      const std::size_t end = std::min(nt, (b + 1) * block);
      for (std::size_t a = b * block; a < end; ++a) {
        const double* z = &z_[a * p_];
        for (int i = 1; i < k_; ++i) {
          const double* psi = &theta[static_cast<std::size_t>(i - 1) * p_];
          double eta = 0.0;
          for (std::size_t c = 0; c < p_; ++c)
            eta += z[c] * psi[c];
          beta[static_cast<std::size_t>(i)] = link_inverse(link_, eta);
        }
        const double* tg = &target_[a * nr_];
        const double* wt = &weight_[a * nr_];
        std::fill(lam.begin(), lam.end(), 0.0);
        for (int i = 0; i <= k_; ++i) {
          const double bi = beta[static_cast<std::size_t>(i)];
          const double* bw = &bw_[static_cast<std::size_t>(i) * nr_];
          for (std::size_t r = 0; r < nr_; ++r)
            lam[r] += bw[r] * bi;
        }
        for (std::size_t r = 0; r < nr_; ++r)
          acc += wt[r] * std::abs(tg[r] - lam[r]);
      }
      partial[b] = acc;
    };
    if (workers_ == 1 || nb < 4) {
      for (std::size_t b = 0; b < nb; ++b)
        run_block(b);
    } else {
      const auto nbi = static_cast<std::ptrdiff_t>(nb);
#pragma omp parallel for schedule(static) num_threads(thread_count(workers_))
      for (std::ptrdiff_t b = 0; b < nbi; ++b)
        run_block(static_cast<std::size_t>(b));
    }
    double s = 0.0;
    for (double v : partial)
      s += v;
    return s / total_weight_;
  }

private:
  int k_;
  Link link_;
  std::size_t p_;
  std::size_t nr_;
  std::vector<std::size_t> times_;
  int workers_;
  std::vector<double> bw_;
  std::vector<double> z_;
  std::vector<double> target_;
  std::vector<double> weight_;
  double total_weight_ = 0.0;
};

std::vector<std::size_t> strided(std::size_t n, std::size_t stride)
{
  stride = std::max<std::size_t>(stride, 1);
  std::vector<std::size_t> v;
  for (std::size_t i = stride / 2; i < n; i += stride)
    v.push_back(i);
  return v;
}

std::vector<double> flatten(const Eigen::MatrixXd& psi)
{
  std::vector<double> v(static_cast<std::size_t>(psi.size()));
  for (Eigen::Index i = 0; i < psi.rows(); ++i)
    for (Eigen::Index c = 0; c < psi.cols(); ++c)
      v[static_cast<std::size_t>(i * psi.cols() + c)] = psi(i, c);
  return v;
}

Eigen::MatrixXd unflatten(const std::vector<double>& v, int rows, std::size_t cols)
{
  Eigen::MatrixXd psi(rows, static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < psi.rows(); ++i)
    for (Eigen::Index c = 0; c < psi.cols(); ++c)
      psi(i, c) = v[static_cast<std::size_t>(i * psi.cols() + c)];
  return psi;
}

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x)
{
  auto it = std::lower_bound(xs.begin(), xs.end(), x);
  if (it == xs.begin())
    return ys.front();
  if (it == xs.end())
    return ys.back();
  const std::size_t i = static_cast<std::size_t>(it - xs.begin());
  const double f = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + f * (ys[i] - ys[i - 1]);
}

} // namespace

std::vector<double> bernstein_weights(int k, double w)
{
  if (k < 1)
    throw InvalidArgument("Bernstein degree must be at least 1");
  std::vector<double> b(static_cast<std::size_t>(k) + 1);
  if (w <= 0.0 || w >= 1.0) {
    std::fill(b.begin(), b.end(), 0.0);
    b[w <= 0.0 ? 0 : static_cast<std::size_t>(k)] = 1.0;
    return b;
  }
  double binom = 1.0;
  for (int i = 0; i <= k; ++i) {
    b[static_cast<std::size_t>(i)] = binom * std::pow(w, i) * std::pow(1.0 - w, k - i);
    binom = binom * (k - i) / (i + 1);
  }
  return b;
}

void BernsteinModel::validate() const
{
  if (degree < 2 || degree > 15)
    throw InvalidArgument("Bernstein degree must lie in 2..15");
  basis.validate();
  if (!basis.intercept)
    throw InvalidArgument("Bernstein coefficient basis needs an intercept");
  if (psi.rows() != degree - 1 || psi.cols() != static_cast<Eigen::Index>(basis.size()))
    throw InvalidArgument("Bernstein coefficient matrix has the wrong shape");
}

double BernsteinModel::beta(int i, std::span<const double> z) const
{
  if (i <= 0 || i >= degree)
    return 1.0;
  if (z.size() != static_cast<std::size_t>(psi.cols()))
    throw InvalidArgument("covariate row length does not match the basis");
  double eta = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c)
    eta += z[c] * psi(i - 1, static_cast<Eigen::Index>(c));
  return link_inverse(link, eta);
}

double BernsteinModel::eval(double w, std::span<const double> z) const
{
  if (!(w >= 0.0 && w <= 1.0))
    throw InvalidArgument("ray must lie in [0,1]");
  const auto b = bernstein_weights(degree, w);
  double s = 0.0;
  for (int i = 0; i <= degree; ++i)
    s += b[static_cast<std::size_t>(i)] * beta(i, z);
  return s;
}

double BernsteinModel::eval(double w, double t, double day) const
{
  const Eigen::VectorXd z = basis.row(t, day);
  return eval(w, std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
}

double BernsteinModel::eval_bounded(double w, double t, double day) const
{
  return apply_bounds(eval(w, t, day), w);
}

double bernstein_objective(const AdfGrid& grid, const BernsteinModel& model, int workers)
{
  model.validate();
  const Objective obj(grid, model.degree, model.link, model.basis, strided(grid.times(), 1), strided(grid.rays(), 1),
                      workers);
  return obj(flatten(model.psi));
}

BernsteinFit fit_bernstein(const AdfGrid& grid, const BernsteinOptions& options)
{
  if (grid.times() == 0 || grid.values.cols() != static_cast<Eigen::Index>(grid.times()) ||
      grid.values.rows() != static_cast<Eigen::Index>(grid.rays()))
    throw InvalidArgument("ADF grid is incomplete");
  if (options.starts < 1 || options.max_evals < 1)
    throw InvalidArgument("Bernstein fit needs at least one start and one evaluation");

  BernsteinModel proto;
  proto.degree = options.degree;
  proto.link = options.link;
  proto.basis = resolve_basis(options.basis, grid.times());
  const int k = options.degree;
  const std::size_t p = proto.basis.size();
  proto.psi = Eigen::MatrixXd::Zero(k - 1, static_cast<Eigen::Index>(p));
  proto.validate();

  // Three resolutions: a sparse sub-grid for the multi-start search, a
  // medium one to refine the best start, and the full grid to finish.
  const std::size_t n = grid.times();
  const std::size_t stride = options.coarse_stride > 0 ? static_cast<std::size_t>(options.coarse_stride)
                                                       : std::max<std::size_t>(1, n / 100);
  const auto all_rays = strided(grid.rays(), 1);
  const Objective sparse(grid, k, options.link, proto.basis, strided(n, 4 * stride), strided(grid.rays(), 4),
                         options.workers);
  const Objective medium(grid, k, options.link, proto.basis, strided(n, stride), all_rays, options.workers);
  const Objective full(grid, k, options.link, proto.basis, strided(n, 1), all_rays, options.workers);

  // Start 0: constant coefficient functions equal to the time-averaged
  // estimate at ray i/k.
  std::vector<double> avg(grid.rays(), 0.0);
  for (std::size_t r = 0; r < grid.rays(); ++r) {
    double s = 0.0, c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = grid.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i));
      if (grid.floored(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) == 0 && std::isfinite(v)) {
        s += v;
        c += 1.0;
      }
    }
    avg[r] = c > 0.0 ? s / c : 1.0;
  }
  std::vector<double> theta0(static_cast<std::size_t>(k - 1) * p, 0.0);
  for (int i = 1; i < k; ++i)
    theta0[static_cast<std::size_t>(i - 1) * p] =
      link_forward(options.link, interpolate(grid.grid.rays, avg, static_cast<double>(i) / k));

  BernsteinFit result;
  NelderMeadOptions nm;
  nm.max_evals = options.max_evals;
  nm.f_tol = options.tolerance;
  nm.x_tol = 1e-6;

  std::vector<std::vector<double>> starts(static_cast<std::size_t>(options.starts), theta0);
  for (int s = 1; s < options.starts; ++s) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(s)));
    for (double& v : starts[static_cast<std::size_t>(s)])
      v += 0.3 * rng.normal();
  }

  // Nelder-Mead restarted once from its own optimum, which recovers from a
  // collapsed simplex.
  int evals = 0;
  auto minimise = [&](const Objective& f, const std::vector<double>& x0, double step, int budget) {
    NelderMeadOptions o = nm;
    o.max_evals = budget;
    auto r1 = nelder_mead(std::cref(f), x0, std::vector<double>(x0.size(), step), o);
    o.max_evals = std::max(1, budget - r1.evals);
    auto r2 = nelder_mead(std::cref(f), r1.x, std::vector<double>(x0.size(), 0.2 * step), o);
    evals += r1.evals + r2.evals;
    r2.converged = r1.converged && r2.converged;
    if (r1.f < r2.f)
      r2.x = r1.x, r2.f = r1.f;
    return r2;
  };

  std::vector<double> best_theta;
  double best_sparse = std::numeric_limits<double>::infinity();
  bool best_converged = false;
  for (const auto& start : starts) {
    result.start_objectives.push_back(full(start));
    const auto r = minimise(sparse, start, 0.25, options.max_evals);
    if (r.f < best_sparse) {
      best_sparse = r.f;
      best_theta = r.x;
      best_converged = r.converged;
    }
  }
  const auto rm = minimise(medium, best_theta, 0.05, options.max_evals);
  best_converged = best_converged && rm.converged;

  NelderMeadOptions polish = nm;
  polish.max_evals = std::max(1, options.polish_evals);
  auto rp = nelder_mead(std::cref(full), rm.x, std::vector<double>(theta0.size(), 0.01), polish);
  evals += rp.evals;
  std::vector<double> final_theta = rp.x;
  double final_f = rp.f;

  // Never return anything worse than a start point.
  for (std::size_t s = 0; s < starts.size(); ++s) {
    if (result.start_objectives[s] < final_f) {
      final_theta = starts[s];
      final_f = result.start_objectives[s];
      best_converged = false;
    }
  }

  result.model = proto;
  result.model.psi = unflatten(final_theta, k - 1, p);
  result.objective = final_f;
  result.converged = best_converged;
  result.evaluations = evals;
  return result;
}

} // namespace nsadf
