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


#include "nsadf/evaluation.hpp"

#include "nsadf/error.hpp"
#include "nsadf/rng.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

namespace nsadf {

namespace {

int thread_count(int workers)
{
  return workers > 0 ? workers : omp_get_max_threads();
}

std::vector<double> average_ranks(std::span<const double> v)
{
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]])
      ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      rank[idx[k]] = r;
    i = j + 1;
  }
  return rank;
}

} // namespace

double ise(std::span<const double> estimate, std::span<const double> truth, const RayGrid& grid)
{
  grid.validate();
  if (estimate.size() != grid.size() || truth.size() != grid.size())
    throw InvalidArgument("ise: profiles must match the ray grid");
  double s = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double a = estimate[i - 1] - truth[i - 1];
    const double b = estimate[i] - truth[i];
    s += 0.5 * (a * a + b * b) * (grid.rays[i] - grid.rays[i - 1]);
  }
  return s;
}

double ise(const std::function<double(double)>& estimate, const std::function<double(double)>& truth, const RayGrid& grid)
{
  std::vector<double> e(grid.size()), t(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    e[i] = estimate(grid.rays[i]);
    t[i] = truth(grid.rays[i]);
  }
  return ise(e, t, grid);
}

void ReplicationSet::validate() const
{
  grid.validate();
  const auto nr = static_cast<Eigen::Index>(grid.size());
  const auto nt = static_cast<Eigen::Index>(times.size());
  if (truth.rows() != nr || truth.cols() != nt)
    throw InvalidArgument("replication truth has the wrong shape");
  for (const auto& e : estimates)
    if (e.rows() != nr || e.cols() != nt)
      throw InvalidArgument("replicate estimate has the wrong shape");
}

std::vector<double> ReplicationSet::profile(std::size_t r, std::size_t c) const
{
  const auto& m = estimates.at(r);
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
  return v;
}

std::vector<double> ReplicationSet::truth_profile(std::size_t c) const
{
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = truth(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
  return v;
}

double mise(const ReplicationSet& reps, std::size_t c)
{
  reps.validate();
  if (reps.replicates() < 2)
    throw InvalidArgument("mise needs at least two replicates");
  if (c >= reps.times.size())
    throw InvalidArgument("mise: time column out of range");
  const auto truth = reps.truth_profile(c);
  double s = 0.0;
  for (std::size_t r = 0; r < reps.replicates(); ++r)
    s += ise(reps.profile(r, c), truth, reps.grid);
  return s / static_cast<double>(reps.replicates());
}

double empirical_quantile(std::vector<double> values, double prob)
{
  if (values.empty())
    throw InvalidArgument("empirical_quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0))
    throw InvalidArgument("probability must lie in [0,1]");
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Envelope envelope(std::span<const std::vector<double>> replicates, std::vector<double> probs)
{
  if (replicates.empty())
    throw InvalidArgument("envelope needs at least one replicate");
  const std::size_t np = replicates.front().size();
  for (const auto& r : replicates)
    if (r.size() != np)
      throw InvalidArgument("envelope replicates differ in length");
  for (std::size_t k = 1; k < probs.size(); ++k)
    if (!(probs[k] >= probs[k - 1]))
      throw InvalidArgument("envelope probabilities must be sorted");

  Envelope e;
  e.fallback = replicates.size() < 40;
  e.probs = probs;
  e.bands.assign(probs.size(), std::vector<double>(np));
  std::vector<double> column(replicates.size());
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t r = 0; r < replicates.size(); ++r)
      column[r] = replicates[r][i];
    std::sort(column.begin(), column.end());
    for (std::size_t k = 0; k < probs.size(); ++k) {
      const double pr = probs[k];
      if (e.fallback && (pr < 0.05 || pr > 0.95))
        e.bands[k][i] = pr < 0.5 ? column.front() : column.back();
      else
        e.bands[k][i] = empirical_quantile(column, pr);
    }
  }
  return e;
}

std::vector<EtaPoint> rolling_eta(const ExpSeries& data, std::size_t half_window, double threshold_q, std::size_t step)
{
  data.validate(true);
  const std::size_t n = data.size();
  if (2 * half_window + 1 < 200 || n < 200)
    throw InvalidArgument("rolling_eta windows must contain at least 200 points");
  if (!(threshold_q > 0.0 && threshold_q < 1.0))
    throw InvalidArgument("threshold quantile must lie in (0,1)");
  if (step == 0)
    throw InvalidArgument("rolling_eta step must be positive");

  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i)
    m[i] = std::min(data.x[i], data.y[i]);

  std::vector<EtaPoint> out;
  std::vector<double> buf;
  for (std::size_t c = 0; c < n; c += step) {
    const std::size_t lo = c >= half_window ? c - half_window : 0;
    const std::size_t hi = std::min(n - 1, c + half_window);
    buf.assign(m.begin() + static_cast<std::ptrdiff_t>(lo), m.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    const auto pos = static_cast<std::size_t>(std::floor(threshold_q * static_cast<double>(buf.size())));
    std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(pos), buf.end());
    const double u = buf[pos];
    double sum = 0.0;
    std::size_t k = 0;
    for (std::size_t i = lo; i <= hi; ++i)
      if (m[i] > u) {
        sum += m[i] - u;
        ++k;
      }
    EtaPoint e;
    e.t = data.t[c];
    e.window = hi - lo + 1;
    e.exceedances = k;
    e.sparse = k < 30 || e.window < 200;
    if (k > 0) {
      e.eta = sum / static_cast<double>(k);
      const double half = 1.96 * e.eta / std::sqrt(static_cast<double>(k));
      e.lower = e.eta - half;
      e.upper = e.eta + half;
    }
    out.push_back(e);
  }
  return out;
}

ChiEstimate chi_u(std::span<const double> ux, std::span<const double> uy, double u)
{
  if (ux.size() != uy.size())
    throw InvalidArgument("chi_u: margins differ in length");
  if (!(u > 0.0 && u < 1.0))
    throw InvalidArgument("chi_u: u must lie in (0,1)");
  ChiEstimate c;
  std::size_t joint = 0;
  for (std::size_t i = 0; i < ux.size(); ++i) {
    if (ux[i] > u) {
      ++c.exceedances;
      joint += uy[i] > u ? 1 : 0;
    }
  }
  c.sufficient = c.exceedances >= 50;
  c.chi = c.exceedances > 0 ? static_cast<double>(joint) / static_cast<double>(c.exceedances) : 0.0;
  return c;
}

void BootstrapPlan::validate() const
{
  if (block_len == 0 || segment_len == 0)
    throw InvalidArgument("bootstrap block and segment lengths must be positive");
  if (segment_len % block_len != 0)
    throw InvalidArgument("bootstrap segment length must be a multiple of the block length");
}

ExpSeries block_bootstrap(const ExpSeries& data, const BootstrapPlan& plan, std::size_t index)
{
  plan.validate();
  const std::size_t n = data.size();
  ExpSeries out;
  out.t = time_index(n);
  out.x.reserve(n);
  out.y.reserve(n);
  if (data.has_day())
    out.day.reserve(n);
  Rng rng(derive_seed(plan.seed, index));
  for (std::size_t start = 0; start < n; start += plan.segment_len) {
    const std::size_t len = std::min(plan.segment_len, n - start);
    const std::size_t blocks = (len + plan.block_len - 1) / plan.block_len;
    // Draw whole blocks until the segment is refilled; a short final block
    // (segment not a multiple of block_len) just takes more draws.
    std::size_t written = 0;
    while (written < len) {
      const std::size_t pick = static_cast<std::size_t>(rng.index(blocks));
      const std::size_t from = start + pick * plan.block_len;
      const std::size_t to = std::min(from + plan.block_len, start + len);
      for (std::size_t i = from; i < to && written < len; ++i, ++written) {
        out.x.push_back(data.x[i]);
        out.y.push_back(data.y[i]);
        if (data.has_day())
          out.day.push_back(data.day[i]);
      }
    }
  }
  return out;
}

std::vector<SurvivalCheck> curve_check(const ReturnCurve& curve, const ExpSeries& sample, int workers)
{
  const std::size_t np = curve.points.size();
  const std::size_t n = sample.size();
  if (n == 0)
    throw InvalidArgument("curve_check needs a nonempty sample");
  std::vector<SurvivalCheck> out(np);
  const auto npi = static_cast<std::ptrdiff_t>(np);
#pragma omp parallel for schedule(static) num_threads(thread_count(workers)) if (workers != 1)
  for (std::ptrdiff_t k = 0; k < npi; ++k) {
    const auto& pt = curve.points[static_cast<std::size_t>(k)];
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i)
      c += (sample.x[i] > pt.x && sample.y[i] > pt.y) ? 1 : 0;
    auto& s = out[static_cast<std::size_t>(k)];
    s.w = pt.w;
    s.count = c;
    s.prob = static_cast<double>(c) / static_cast<double>(n);
    s.se = c == 0 ? 3.0 / static_cast<double>(n) : std::sqrt(s.prob * (1.0 - s.prob) / static_cast<double>(n));
  }
  return out;
}

std::vector<SurvivalCheck> curve_check(const ReturnCurve& curve,
                                       Family family,
                                       double param,
                                       std::size_t n,
                                       std::uint64_t seed,
                                       int workers)
{
  if (curve.margin != Margin::exponential)
    throw InvalidArgument("curve_check expects a curve on exponential margins");
  return curve_check(curve, sample_frozen(family, param, n, seed), workers);
}

double spearman(std::span<const double> a, std::span<const double> b)
{
  if (a.size() != b.size() || a.size() < 2)
    throw InvalidArgument("spearman needs two samples of equal length >= 2");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = 0.5 * (n + 1.0);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = ra[i] - mean, db = rb[i] - mean;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0)
    return 0.0;
  return sab / std::sqrt(saa * sbb);
}

ReplicationResult run_replications(const ReplicationConfig& config)
{
  config.spec.validate();
  if (config.replicates < 1)
    throw InvalidArgument("at least one replicate is required");
  if (config.times.empty())
    throw InvalidArgument("replications need at least one evaluation time");

  const std::size_t R = static_cast<std::size_t>(config.replicates);
  const std::size_t nt = config.times.size();
  const std::size_t nr = config.grid.size();

  ReplicationResult res;
  for (auto* set : {&res.qr, &res.bp}) {
    set->grid = config.grid;
    set->times = config.times;
    set->truth.resize(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nt));
  }
  for (std::size_t c = 0; c < nt; ++c) {
    const double param = param_trajectory(config.spec, config.times[c]);
    for (std::size_t r = 0; r < nr; ++r)
      res.qr.truth(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
        true_adf(config.spec.family, param, config.grid.rays[r], config.spec.kappa1, config.spec.kappa2);
  }
  res.bp.truth = res.qr.truth;
  res.qr.estimates.resize(R);
  if (config.fit_bernstein)
    res.bp.estimates.resize(R);
  if (config.curve_p) {
    res.curves_qr.resize(R);
    if (config.fit_bernstein)
      res.curves_bp.resize(R);
  }
  res.seeds.resize(R);
  for (std::size_t i = 0; i < R; ++i)
    res.seeds[i] = derive_seed(config.base_seed, i);

  std::exception_ptr error;
  const auto Ri = static_cast<std::ptrdiff_t>(R);
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count(config.workers)) if (config.workers != 1)
  for (std::ptrdiff_t ii = 0; ii < Ri; ++ii) {
    try {
      const auto i = static_cast<std::size_t>(ii);
      CopulaSpec spec = config.spec;
      spec.seed = res.seeds[i];
      const ExpSeries data = sample(spec, config.mcmc);
      AdfOptions adf = config.adf;
      adf.workers = 1;
      const AdfGrid grid = lambda_qr_average(data, config.grid, config.schedule, adf);

      Eigen::MatrixXd qr(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nt));
      for (std::size_t c = 0; c < nt; ++c) {
        const auto ls = lambda_star(grid, static_cast<std::size_t>(config.times[c]) - 1);
        for (std::size_t r = 0; r < nr; ++r)
          qr(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = ls[r];
        if (config.curve_p)
          res.curves_qr[i].push_back(
            enforce_ordering(exp_curve_averaged(grid, ls, *config.curve_p, config.times[c])));
      }
      res.qr.estimates[i] = std::move(qr);

      if (config.fit_bernstein) {
        BernsteinOptions bo = config.bernstein;
        bo.workers = 1;
        const BernsteinFit fit = fit_bernstein(grid, bo);
        Eigen::MatrixXd bp(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nt));
        for (std::size_t c = 0; c < nt; ++c) {
          const auto ls = lambda_star(fit.model, config.grid, config.times[c]);
          for (std::size_t r = 0; r < nr; ++r)
            bp(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = ls[r];
          if (config.curve_p)
            res.curves_bp[i].push_back(
              enforce_ordering(exp_curve_averaged(grid, ls, *config.curve_p, config.times[c])));
        }
        res.bp.estimates[i] = std::move(bp);
      }
    } catch (...) {
#pragma omp critical(nsadf_replication_error)
      if (!error)
        error = std::current_exception();
    }
  }
  if (error)
    std::rethrow_exception(error);
  return res;
}

ReturnCurve median_curve(std::span<const ReturnCurve> curves)
{
  if (curves.empty())
    throw InvalidArgument("median_curve of no curves");
  for (const auto& c : curves)
    if (c.margin != Margin::exponential)
      throw InvalidArgument("median_curve expects curves on exponential margins");
  ReturnCurve out = curves.front();
  const std::size_t np = out.points.size();
  std::vector<double> radial(curves.size());
  for (std::size_t k = 0; k < np; ++k) {
    for (std::size_t r = 0; r < curves.size(); ++r) {
      if (curves[r].points.size() != np || curves[r].points[k].w != out.points[k].w)
        throw InvalidArgument("median_curve: curves have different ray grids");
      radial[r] = curves[r].points[k].x + curves[r].points[k].y;
    }
    const double s = empirical_quantile(radial, 0.5);
    const double w = out.points[k].w;
    out.points[k].x = w * s;
    out.points[k].y = (1.0 - w) * s;
  }
  return out;
}

} // namespace nsadf
