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


#include "nsadf/surrogate.hpp"

#include "nsadf/copula.hpp"
#include "nsadf/error.hpp"
#include "nsadf/gpd.hpp"
#include "nsadf/rng.hpp"
#include "nsadf/special.hpp"

#include <omp.h>

#include <cmath>
#include <exception>
#include <numbers>

namespace nsadf {

double SurrogateSpec::dependence(double t) const
{
  const double n = static_cast<double>(this->n());
  return r_start + (r_end - r_start) * t / n;
}

void SurrogateSpec::validate() const
{
  if (n_years < 1 || obs_per_year < 1)
    throw InvalidArgument("surrogate needs at least one year and one observation per year");
  for (double r : {r_start, r_end})
    if (!(r > 0.0 && r <= 1.0))
      throw InvalidArgument("surrogate dependence parameters must lie in (0,1]");
  for (const auto* m : {&x, &y})
    if (m->gpd_tail && (!(m->tail_q > 0.0 && m->tail_q < 1.0) || !(m->tail_tau > 0.0) || !(m->tail_xi > -1.0)))
      throw InvalidArgument("surrogate GPD tail needs q in (0,1), tau > 0 and xi > -1");
}

SurrogateSpec SurrogateSpec::null_spec(double r)
{
  SurrogateSpec s;
  s.x = MarginGenerator{18.0, 0.0, 0.0, 0.0, 0.7, 0.0, false};
  s.y = MarginGenerator{30.0, 0.0, 0.0, 0.0, 1.2, 0.0, false};
  s.r_start = r;
  s.r_end = r;
  return s;
}

namespace {

double margin_value(const MarginGenerator& g, double e, double tn, double day, double period)
{
  // e is a standard exponential draw; u = 1 - exp(-e) without cancellation.
  const double sf = std::exp(-e);
  double r;
  if (g.gpd_tail && sf < 1.0 - g.tail_q) {
    const double zq = norm_quantile(g.tail_q);
    r = zq + gpd_quantile_sf(sf / (1.0 - g.tail_q), g.tail_tau, g.tail_xi);
  } else {
    r = -norm_quantile(sf);
  }
  const double arg = 2.0 * std::numbers::pi * day / period;
  const double mu = g.loc0 + g.loc_trend * tn + g.harm_sin * std::sin(arg) + g.harm_cos * std::cos(arg);
  const double sigma = std::exp(g.log_scale0 + g.log_scale_trend * tn);
  return mu + sigma * r;
}

} // namespace

RawSeries generate_surrogate(const SurrogateSpec& spec)
{
  spec.validate();
  const std::size_t n = spec.n();
  RawSeries raw;
  raw.t = time_index(n);
  raw.day.resize(n);
  raw.x.resize(n);
  raw.y.resize(n);
  Rng rng(derive_seed(spec.seed, 11));
  const double period = static_cast<double>(spec.obs_per_year);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i + 1);
    const double day = static_cast<double>(i % static_cast<std::size_t>(spec.obs_per_year) + 1);
    const auto [ex, ey] = draw_exponential_pair(Family::inv_logistic, spec.dependence(t), 0.0, 0.0, rng);
    const double tn = t / static_cast<double>(n);
    raw.day[i] = day;
    raw.x[i] = margin_value(spec.x, ex, tn, day, period);
    raw.y[i] = margin_value(spec.y, ey, tn, day, period);
  }
  return raw;
}

void CaseConfig::validate() const
{
  if (obs_per_year < 1 || !(return_period_years > 0.0))
    throw InvalidArgument("case config needs positive obs_per_year and return period");
  if (years.empty())
    throw InvalidArgument("case config needs at least one curve year");
  grid.validate();
  schedule.validate();
  if (bootstrap.resamples > 0)
    bootstrap.validate();
}

namespace {

BasisSpec scaled(BasisSpec b, std::size_t n)
{
  if (!(b.time_scale > 0.0))
    b.time_scale = static_cast<double>(n);
  return b;
}

template <class F>
void stage(const std::string& name,
           CaseResult& result,
           const std::function<void(const std::string&, const CaseResult&)>& on_stage,
           F&& body)
{
  try {
    body();
  } catch (const NumericalError& e) {
    throw NumericalError(name, e.what());
  } catch (const InvalidArgument& e) {
    throw NumericalError(name, e.what());
  }
  result.completed.push_back(name);
  if (on_stage)
    on_stage(name, result);
}

} // namespace

CaseResult run_case_pipeline(const RawSeries& raw,
                             const CaseConfig& config,
                             const std::function<void(const std::string&, const CaseResult&)>& on_stage)
{
  config.validate();
  raw.validate();
  const std::size_t n = raw.size();
  CaseResult res;
  res.p = config.probability();

  MarginOptions mo = config.margins;
  mo.loc_basis = scaled(mo.loc_basis, n);
  mo.scale_basis = scaled(mo.scale_basis, n);
  mo.tail_basis = scaled(mo.tail_basis, n);
  if ((mo.loc_basis.harmonics > 0 || mo.scale_basis.harmonics > 0 || mo.tail_basis.harmonics > 0) && raw.day.empty())
    throw InvalidArgument("harmonic margin terms need a day column");

  stage("margins", res, on_stage, [&] {
    res.margin_x = fit_margin(raw.x, raw.t, raw.day, mo);
    res.margin_y = fit_margin(raw.y, raw.t, raw.day, mo);
  });
  stage("transform", res, on_stage, [&] { res.exponential = to_exponential(raw, res.margin_x, res.margin_y); });

  AdfOptions adf = config.adf;
  adf.workers = config.workers;
  stage("adf", res, on_stage, [&] {
    res.grid = lambda_qr_average(res.exponential, config.grid, config.schedule, adf);
  });

  BernsteinOptions bo = config.bernstein;
  bo.workers = config.workers;
  stage("bernstein", res, on_stage, [&] { res.bernstein = fit_bernstein(res.grid, bo); });

  stage("return_curves", res, on_stage, [&] {
    for (int year : config.years) {
      if (year < 1 || static_cast<std::size_t>(year - 1) * static_cast<std::size_t>(config.obs_per_year) +
                           static_cast<std::size_t>(config.curve_day) > n)
        throw InvalidArgument("curve year " + std::to_string(year) + " lies outside the series");
      const double t = static_cast<double>((year - 1) * config.obs_per_year + config.curve_day);
      const double day = static_cast<double>(config.curve_day);
      const auto ls = lambda_star(res.bernstein.model, config.grid, t, day);
      ReturnCurve c = enforce_ordering(exp_curve_averaged(res.grid, ls, res.p, t, day));
      res.curves_original.push_back(enforce_ordering(back_transform(c, res.margin_x, res.margin_y)));
      res.curves_exponential.push_back(std::move(c));
    }
  });

  stage("eta", res, on_stage, [&] {
    res.rolling = rolling_eta(res.exponential, config.eta_half_window, config.eta_threshold_q, config.eta_step);
    std::vector<double> eta(n);
    for (std::size_t i = 0; i < n; ++i)
      eta[i] = eta_from_adf(res.bernstein.model.eval_bounded(0.5, res.exponential.t[i], res.exponential.day_at(i)));
    for (const auto& e : res.rolling) {
      const auto c = static_cast<std::size_t>(e.t) - 1;
      const std::size_t lo = c >= config.eta_half_window ? c - config.eta_half_window : 0;
      const std::size_t hi = std::min(n - 1, c + config.eta_half_window);
      double s = 0.0;
      for (std::size_t i = lo; i <= hi; ++i)
        s += eta[i];
      res.model_eta.push_back(s / static_cast<double>(hi - lo + 1));
    }
  });

  if (config.bootstrap.resamples > 0) {
    stage("bootstrap", res, on_stage, [&] {
      const std::size_t R = config.bootstrap.resamples;
      const double t_mid = static_cast<double>(n / 2);
      std::vector<std::vector<double>> profiles(R);
      AdfOptions ba = config.adf;
      ba.workers = 1;
      BernsteinOptions bb = config.bernstein;
      bb.workers = 1;
      std::exception_ptr error;
      const auto Ri = static_cast<std::ptrdiff_t>(R);
      const int threads = config.workers > 0 ? config.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (config.workers != 1)
      for (std::ptrdiff_t b = 0; b < Ri; ++b) {
        try {
          const ExpSeries boot = block_bootstrap(res.exponential, config.bootstrap, static_cast<std::size_t>(b));
          const AdfGrid g = lambda_qr_average(boot, config.grid, config.schedule, ba);
          const BernsteinFit f = fit_bernstein(g, bb);
          profiles[static_cast<std::size_t>(b)] = lambda_star(f.model, config.grid, t_mid);
        } catch (...) {
#pragma omp critical(nsadf_bootstrap_error)
          if (!error)
            error = std::current_exception();
        }
      }
      if (error)
        std::rethrow_exception(error);
      res.bootstrap_band = envelope(profiles);
    });
  }
  return res;
}

} // namespace nsadf
