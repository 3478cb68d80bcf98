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

#include "nsadf/copula.hpp"

#include "nsadf/error.hpp"
#include "nsadf/special.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace nsadf {

namespace {

constexpr double gaussian_rho_limit = 1.0 - 1e-9;

struct FamilyName
{
  Family family;
  std::string_view name;
};

constexpr std::array<FamilyName, 6> family_names{{
  {Family::gaussian_pos, "gaussian_pos"},
  {Family::gaussian_neg, "gaussian_neg"},
  {Family::inv_logistic, "inv_logistic"},
  {Family::inv_alog, "inv_alog"},
  {Family::inv_husler_reiss, "inv_husler_reiss"},
  {Family::gauge_model12, "gauge_model12"},
}};

void check_param(Family f, double p)
{
  if (!std::isfinite(p))
    throw InvalidArgument("copula parameter must be finite");
  switch (f) {
  case Family::gaussian_pos:
  case Family::gaussian_neg:
    if (p < -1.0 || p > 1.0)
      throw InvalidArgument("gaussian correlation must lie in [-1,1]");
    break;
  case Family::inv_logistic:
  case Family::inv_alog:
    if (!(p > 0.0 && p <= 1.0))
      throw InvalidArgument("logistic dependence parameter must lie in (0,1]");
    break;
  case Family::inv_husler_reiss:
    if (!(p > 0.0))
      throw InvalidArgument("Husler-Reiss parameter must be positive");
    break;
  case Family::gauge_model12:
    if (!(p > 0.0 && p < 1.0))
      throw InvalidArgument("gauge parameter c must lie in (0,1)");
    break;
  }
}

void check_kappa(double k1, double k2)
{
  if (!(k1 >= 0.0 && k1 <= 1.0 && k2 >= 0.0 && k2 <= 1.0))
    throw InvalidArgument("asymmetry parameters must lie in [0,1]");
}

// log X for one margin of the inverted logistic, given the shared stable draw.
double inv_logistic_log_margin(double alpha, double log_stable_alpha, Rng& rng)
{
  return alpha * std::log(rng.exponential()) - log_stable_alpha;
}

// alpha * log S for a positive alpha-stable S with Laplace transform exp(-s^alpha).
double log_stable_times_alpha(double alpha, Rng& rng)
{
  if (alpha >= 1.0)
    return 0.0;
  const double u = std::numbers::pi * rng.uniform();
  const double e = rng.exponential();
  return alpha * std::log(std::sin(alpha * u)) - std::log(std::sin(u)) +
         (1.0 - alpha) * (std::log(std::sin((1.0 - alpha) * u)) - std::log(e));
}

std::pair<double, double> draw_inv_logistic(double alpha, Rng& rng)
{
  const double ls = log_stable_times_alpha(alpha, rng);
  const double lx = inv_logistic_log_margin(alpha, ls, rng);
  const double ly = inv_logistic_log_margin(alpha, ls, rng);
  return {std::exp(lx), std::exp(ly)};
}

double hr_lambda(double s, double w)
{
  if (w <= 0.0 || w >= 1.0)
    return 1.0;
  const double l = std::log(w / (1.0 - w));
  return w * norm_cdf(1.0 / s + 0.5 * s * l) + (1.0 - w) * norm_cdf(1.0 / s - 0.5 * s * l);
}

// Conditional draw of Y given X = x for the inverted Husler-Reiss copula: solve
// log Pr(Y > x e^l | X = x) = log U for l.
double hr_conditional(double s, double x, double log_u)
{
  auto f = [&](double l) {
    const double a = 1.0 / s - 0.5 * s * l;
    const double b = 1.0 / s + 0.5 * s * l;
    return x * (norm_cdf(-a) - std::exp(l) * norm_cdf(b)) + log_norm_cdf(a) - log_u;
  };
  double lo = -10.0, hi = 10.0;
  while (f(lo) < 0.0 && lo > -700.0)
    lo -= 20.0;
  while (f(hi) > 0.0 && hi < 700.0)
    hi += 20.0;
  std::uintmax_t iters = 200;
  const auto tol = [](double a, double b) { return std::abs(b - a) < 1e-10; };
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  return x * std::exp(0.5 * (r.first + r.second));
}

} // namespace

std::string_view family_name(Family f)
{
  for (const auto& fn : family_names)
    if (fn.family == f)
      return fn.name;
  return "unknown";
}

Family parse_family(std::string_view name)
{
  for (const auto& fn : family_names)
    if (fn.name == name)
      return fn.family;
  throw InvalidArgument("unknown copula family '" + std::string(name) + "'");
}

void CopulaSpec::validate() const
{
  if (n < 1)
    throw InvalidArgument("copula sample size must be at least 1");
  check_kappa(kappa1, kappa2);
  if (frozen)
    check_param(family, *frozen);
}

double param_trajectory(const CopulaSpec& spec, double t)
{
  if (spec.frozen)
    return *spec.frozen;
  const double n = static_cast<double>(spec.n);
  if (!(t >= 1.0 && t <= n))
    throw InvalidArgument("time index outside 1..n");
  const double f = t / n;
  switch (spec.family) {
  case Family::gaussian_pos:
    return f;
  case Family::gaussian_neg:
    return -0.9 + 0.9 * f;
  case Family::inv_logistic:
  case Family::inv_alog:
    return 0.01 + 0.98 * f;
  case Family::inv_husler_reiss:
    return 0.01 + 9.99 * f;
  case Family::gauge_model12:
    return 0.1 + 0.8 * f;
  }
  return 0.0;
}

double sampler_param(Family f, double param)
{
  check_param(f, param);
  if (f == Family::gaussian_pos || f == Family::gaussian_neg)
    return std::clamp(param, -gaussian_rho_limit, gaussian_rho_limit);
  return param;
}

double gauge_function(double x, double y, double c)
{
  return std::max({(x - y) / c, (y - x) / c, (x + y) / (2.0 - c)});
}

std::pair<double, double> draw_gauge_raw(double c, Rng& rng)
{
  // Uniform point in the unit gauge ball (inside [0,1]^2) scaled by a
  // Gamma(3) radius gives density proportional to exp(-g).
  double vx, vy;
  do {
    vx = rng.uniform();
    vy = rng.uniform();
  } while (gauge_function(vx, vy, c) > 1.0);
  const double r = rng.exponential() + rng.exponential() + rng.exponential();
  return {r * vx, r * vy};
}

std::pair<double, double> draw_exponential_pair(Family f, double param, double kappa1, double kappa2, Rng& rng)
{
  const double p = sampler_param(f, param);
  switch (f) {
  case Family::gaussian_pos:
  case Family::gaussian_neg: {
    const double z1 = rng.normal();
    const double z2 = p * z1 + std::sqrt((1.0 - p) * (1.0 + p)) * rng.normal();
    return {normal_to_exponential(z1), normal_to_exponential(z2)};
  }
  case Family::inv_logistic:
    return draw_inv_logistic(p, rng);
  case Family::inv_alog: {
    check_kappa(kappa1, kappa2);
    const auto [xl, yl] = draw_inv_logistic(p, rng);
    const double ea = rng.exponential(), eb = rng.exponential();
    const double inf = std::numeric_limits<double>::infinity();
    const double x = std::min(kappa1 < 1.0 ? ea / (1.0 - kappa1) : inf, kappa1 > 0.0 ? xl / kappa1 : inf);
    const double y = std::min(kappa2 < 1.0 ? eb / (1.0 - kappa2) : inf, kappa2 > 0.0 ? yl / kappa2 : inf);
    return {x, y};
  }
  case Family::inv_husler_reiss: {
    const double x = rng.exponential();
    return {x, hr_conditional(p, x, std::log(rng.uniform()))};
  }
  case Family::gauge_model12:
    throw InvalidArgument("gauge_model12 has no exact exponential-margin sampler; use MCMC or sample_frozen");
  }
  return {0.0, 0.0};
}

void empirical_exponential(std::vector<double>& v)
{
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> out(n);
  const double n1 = static_cast<double>(n) + 1.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]])
      ++j;
    const double rank = 0.5 * static_cast<double>(i + j + 2);
    const double e = -std::log((n1 - rank) / n1);
    for (std::size_t k = i; k <= j; ++k)
      out[idx[k]] = e;
    i = j + 1;
  }
  v.swap(out);
}

ExpSeries sample(const CopulaSpec& spec, const std::optional<McmcConfig>& mcmc, McmcDiagnostics* diagnostics)
{
  spec.validate();
  ExpSeries out;
  out.t = time_index(spec.n);
  out.x.resize(spec.n);
  out.y.resize(spec.n);

  if (spec.family != Family::gauge_model12) {
    Rng rng(derive_seed(spec.seed, 0));
    for (std::size_t i = 0; i < spec.n; ++i) {
      const double p = param_trajectory(spec, static_cast<double>(i + 1));
      std::tie(out.x[i], out.y[i]) = draw_exponential_pair(spec.family, p, spec.kappa1, spec.kappa2, rng);
    }
    return out;
  }

  if (!mcmc)
    throw InvalidArgument("gauge_model12 sampling needs an MCMC configuration");
  const McmcConfig& cfg = *mcmc;
  if (cfg.burn_in < 0 || cfg.thin < 1 || !(cfg.proposal_sd > 0.0))
    throw InvalidArgument("MCMC configuration needs burn_in >= 0, thin >= 1, proposal_sd > 0");

  Rng rng(derive_seed(spec.seed, 1 + cfg.chain_seed));
  double x = 1.0, y = 1.0;
  double sd = cfg.proposal_sd;
  std::size_t accepted = 0, proposed = 0;

  // Proposal moves along the gauge's own axes (x-y and x+y) with spreads
  // proportional to the ball's half-widths c and 2-c.
  auto step = [&](double c) {
    const double g0 = gauge_function(x, y, c);
    const double du = sd * c * rng.normal();
    const double dv = sd * (2.0 - c) * rng.normal();
    const double xn = x + 0.5 * (dv + du);
    const double yn = y + 0.5 * (dv - du);
    if (xn < 0.0 || yn < 0.0)
      return false;
    const double g1 = gauge_function(xn, yn, c);
    if (g1 <= g0 || rng.uniform() < std::exp(g0 - g1)) {
      x = xn;
      y = yn;
      return true;
    }
    return false;
  };

  const double c_start = param_trajectory(spec, 1.0);
  int window_acc = 0;
  for (int i = 0; i < cfg.burn_in; ++i) {
    window_acc += step(c_start) ? 1 : 0;
    if (cfg.tune && (i + 1) % 200 == 0) {
      sd = std::clamp(sd * std::exp(window_acc / 200.0 - 0.3), 1e-3, 1e3);
      window_acc = 0;
    }
  }

  for (std::size_t i = 0; i < spec.n; ++i) {
    const double c = param_trajectory(spec, static_cast<double>(i + 1));
    for (int k = 0; k < cfg.thin; ++k) {
      accepted += step(c) ? 1 : 0;
      ++proposed;
    }
    out.x[i] = x;
    out.y[i] = y;
  }

  const double rate = static_cast<double>(accepted) / static_cast<double>(proposed);
  if (diagnostics) {
    diagnostics->acceptance_rate = rate;
    diagnostics->chain_length = static_cast<std::size_t>(cfg.burn_in) + proposed;
    diagnostics->proposal_sd = sd;
  }
  if (rate < 0.1 || rate > 0.6)
    throw NumericalError("mcmc", "acceptance rate " + std::to_string(rate) + " outside [0.1, 0.6]");

  empirical_exponential(out.x);
  empirical_exponential(out.y);
  return out;
}

ExpSeries sample_frozen(Family f, double param, std::size_t n, std::uint64_t seed, double kappa1, double kappa2)
{
  check_param(f, param);
  ExpSeries out;
  out.t = time_index(n);
  out.x.resize(n);
  out.y.resize(n);
  Rng rng(derive_seed(seed, 2));
  if (f == Family::gauge_model12) {
    for (std::size_t i = 0; i < n; ++i)
      std::tie(out.x[i], out.y[i]) = draw_gauge_raw(param, rng);
    empirical_exponential(out.x);
    empirical_exponential(out.y);
    return out;
  }
  for (std::size_t i = 0; i < n; ++i)
    std::tie(out.x[i], out.y[i]) = draw_exponential_pair(f, param, kappa1, kappa2, rng);
  return out;
}

namespace {

double pooled_exponential(const std::vector<double>& pool, double raw)
{
  const auto k = static_cast<double>(std::upper_bound(pool.begin(), pool.end(), raw) - pool.begin());
  return -std::log1p(-k / (static_cast<double>(pool.size()) + 1.0));
}

} // namespace

double PooledMargins::to_exponential_x(double raw) const
{
  return pooled_exponential(x, raw);
}

double PooledMargins::to_exponential_y(double raw) const
{
  return pooled_exponential(y, raw);
}

PooledMargins gauge_pooled_margins(const CopulaSpec& spec, std::size_t size, std::uint64_t seed)
{
  spec.validate();
  if (spec.family != Family::gauge_model12)
    throw InvalidArgument("pooled margins are only needed for gauge_model12");
  if (size < 1000)
    throw InvalidArgument("pooled margin reference needs at least 1000 draws");
  PooledMargins pm;
  pm.x.resize(size);
  pm.y.resize(size);
  Rng rng(derive_seed(seed, 4));
  const double n = static_cast<double>(spec.n);
  for (std::size_t i = 0; i < size; ++i) {
    const double t = 1.0 + (n - 1.0) * (static_cast<double>(i) + 0.5) / static_cast<double>(size);
    std::tie(pm.x[i], pm.y[i]) = draw_gauge_raw(param_trajectory(spec, t), rng);
  }
  std::sort(pm.x.begin(), pm.x.end());
  std::sort(pm.y.begin(), pm.y.end());
  return pm;
}

ExpSeries sample_at_time(const CopulaSpec& spec, double t, std::size_t n, std::uint64_t seed, const PooledMargins* pooled)
{
  spec.validate();
  const double param = param_trajectory(spec, t);
  if (spec.family != Family::gauge_model12)
    return sample_frozen(spec.family, param, n, seed, spec.kappa1, spec.kappa2);

  PooledMargins own;
  if (!pooled) {
    own = gauge_pooled_margins(spec);
    pooled = &own;
  }
  ExpSeries out;
  out.t = time_index(n);
  out.x.resize(n);
  out.y.resize(n);
  Rng rng(derive_seed(seed, 5));
  for (std::size_t i = 0; i < n; ++i) {
    const auto [x, y] = draw_gauge_raw(param, rng);
    out.x[i] = pooled->to_exponential_x(x);
    out.y[i] = pooled->to_exponential_y(y);
  }
  return out;
}

double true_adf(Family f, double param, double w, double kappa1, double kappa2)
{
  if (!(w >= 0.0 && w <= 1.0))
    throw InvalidArgument("ray must lie in [0,1]");
  check_param(f, param);
  if (w == 0.0 || w == 1.0)
    return 1.0;
  const double lo = std::max(w, 1.0 - w);
  switch (f) {
  case Family::gaussian_pos:
  case Family::gaussian_neg: {
    const double rho = param;
    if (rho >= 1.0)
      return lo;
    if (rho < 0.0 || rho * rho <= std::min(w, 1.0 - w) / lo)
      return (1.0 - 2.0 * rho * std::sqrt(w * (1.0 - w))) / ((1.0 - rho) * (1.0 + rho));
    return lo;
  }
  case Family::inv_logistic: {
    const double r = param;
    return std::pow(std::pow(w, 1.0 / r) + std::pow(1.0 - w, 1.0 / r), r);
  }
  case Family::inv_alog: {
    check_kappa(kappa1, kappa2);
    const double r = param;
    const double a = kappa1 * w, b = kappa2 * (1.0 - w);
    const double joint = (a > 0.0 || b > 0.0) ? std::pow(std::pow(a, 1.0 / r) + std::pow(b, 1.0 / r), r) : 0.0;
    return (1.0 - kappa1) * w + (1.0 - kappa2) * (1.0 - w) + joint;
  }
  case Family::inv_husler_reiss:
    return hr_lambda(param, w);
  case Family::gauge_model12:
    // Smallest gauge value over {x >= w, y >= 1-w}.
    return std::max(lo, 1.0 / (2.0 - param));
  }
  return 1.0;
}

double inverted_ev_joint_survival(Family f, double param, double x, double y, double kappa1, double kappa2)
{
  if (f != Family::inv_logistic && f != Family::inv_alog && f != Family::inv_husler_reiss)
    throw InvalidArgument("closed-form joint survival is only available for inverted extreme-value families");
  if (x <= 0.0 && y <= 0.0)
    return 1.0;
  x = std::max(x, 0.0);
  y = std::max(y, 0.0);
  const double s = x + y;
  return std::exp(-s * true_adf(f, param, x / s, kappa1, kappa2));
}

double min_projection(double x, double y, double w)
{
  if (w <= 0.0)
    return y;
  if (w >= 1.0)
    return x;
  return std::min(x / w, y / (1.0 - w));
}

HillEstimate hill_adf(std::span<const double> x, std::span<const double> y, double w, double q)
{
  if (x.size() != y.size())
    throw InvalidArgument("hill_adf: x and y differ in length");
  if (!(q > 0.0 && q < 1.0))
    throw InvalidArgument("hill_adf: q must lie in (0,1)");
  std::vector<double> k(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    k[i] = min_projection(x[i], y[i], w);
  std::vector<double> sorted = k;
  const auto pos = static_cast<std::size_t>(std::floor(q * static_cast<double>(k.size())));
  if (pos >= sorted.size())
    throw InvalidArgument("hill_adf: threshold beyond the sample");
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(pos), sorted.end());
  const double u = sorted[pos];
  double sum = 0.0;
  std::size_t count = 0;
  for (double v : k) {
    if (v > u) {
      sum += v - u;
      ++count;
    }
  }
  if (count < 100)
    throw InvalidArgument("hill_adf: fewer than 100 exceedances");
  HillEstimate h;
  h.exceedances = count;
  h.lambda = static_cast<double>(count) / sum;
  h.se = h.lambda / std::sqrt(static_cast<double>(count));
  return h;
}

namespace {

void check_oracle_args(std::size_t n, double q)
{
  if (n < 100000)
    throw InvalidArgument("oracle_adf_mc needs at least 1e5 samples");
  if (!(q > 0.9 && q < 0.999))
    throw InvalidArgument("oracle_adf_mc threshold quantile must lie in (0.9, 0.999)");
}

} // namespace

HillEstimate oracle_adf_mc(const PairSampler& sampler, double w, std::size_t n, double q, std::uint64_t seed)
{
  check_oracle_args(n, q);
  Rng rng(derive_seed(seed, 3));
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i)
    std::tie(x[i], y[i]) = sampler(rng);
  return hill_adf(x, y, w, q);
}

HillEstimate oracle_adf_mc(Family f, double param, double w, std::size_t n, double q, std::uint64_t seed, double kappa1, double kappa2)
{
  check_oracle_args(n, q);
  const ExpSeries s = sample_frozen(f, param, n, seed, kappa1, kappa2);
  return hill_adf(s.x, s.y, w, q);
}

} // namespace nsadf
