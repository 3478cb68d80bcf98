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


// Command-line front end. Each subcommand reads CSV/JSON inputs, runs one
// stage of the analysis and writes its artifacts plus manifest.json into
// --out. Exit codes: 0 ok, 2 bad arguments or config, 3 numerical failure,
// 4 I/O failure.

#include "nsadf/adf.hpp"
#include "nsadf/copula.hpp"
#include "nsadf/error.hpp"
#include "nsadf/evaluation.hpp"
#include "nsadf/io.hpp"
#include "nsadf/margins.hpp"
#include "nsadf/return_curve.hpp"
#include "nsadf/surrogate.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nsadf::io::json;

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;
constexpr int exit_io = 4;

int default_workers()
{
  if (const char* env = std::getenv("NSADF_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 0)
        return w;
    } catch (const std::exception&) {
    }
    throw nsadf::InvalidArgument("NSADF_WORKERS must be a non-negative integer");
  }
  return 0;
}

fs::path prepare_out(const std::string& out)
{
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw nsadf::IoError("cannot create output directory " + out + ": " + ec.message());
  return dir;
}

std::string fmt(double v)
{
  return nsadf::io::format_double(v);
}

struct Common
{
  std::string out = "nsadf_out";
  int workers = 0;
};

// ---------------------------------------------------------------- simulate

struct SimulateArgs
{
  std::string family = "inv_logistic";
  std::size_t n = 10000;
  std::uint64_t seed = 1;
  std::optional<double> frozen;
  double kappa1 = 0.3;
  double kappa2 = 0.7;
  int burn_in = 10000;
  int thin = 10;
  double proposal_sd = 1.0;
};

void run_simulate(const SimulateArgs& a, const Common& c)
{
  nsadf::CopulaSpec spec;
  spec.family = nsadf::parse_family(a.family);
  spec.n = a.n;
  spec.seed = a.seed;
  spec.frozen = a.frozen;
  spec.kappa1 = a.kappa1;
  spec.kappa2 = a.kappa2;
  std::optional<nsadf::McmcConfig> mcmc;
  if (spec.family == nsadf::Family::gauge_model12)
    mcmc = nsadf::McmcConfig{a.proposal_sd, a.burn_in, a.thin, 0, true};
  nsadf::McmcDiagnostics diag;
  const nsadf::ExpSeries s = nsadf::sample(spec, mcmc, &diag);

  const fs::path dir = prepare_out(c.out);
  json config{{"spec", nsadf::io::to_json(spec)}};
  config["mcmc"] = mcmc ? nsadf::io::to_json(*mcmc) : json(nullptr);
  nsadf::io::Manifest manifest("simulate", config);

  nsadf::io::write_series_csv(dir / "series.csv", s);
  manifest.add(dir / "series.csv");
  json sidecar{{"kind", "simulation"}, {"version", nsadf::io::json_version}, {"spec", config["spec"]},
               {"mcmc", config["mcmc"]}};
  sidecar["diagnostics"] = mcmc ? nsadf::io::to_json(diag) : json(nullptr);
  nsadf::io::write_json(dir / "series.json", sidecar);
  manifest.add(dir / "series.json");
  manifest.write(dir);
}

// ------------------------------------------------------------- fit-margins

struct BasisArgs
{
  int degree = 0;
  int harmonics = 0;
};

struct MarginArgs
{
  std::string data;
  BasisArgs loc{1, 0};
  BasisArgs scale{0, 0};
  BasisArgs tail{0, 0};
  double period = 90.0;
  double threshold_q = 0.9;
  std::optional<double> penalty;
};

nsadf::BasisSpec make_basis(const BasisArgs& b, double n, double period)
{
  nsadf::BasisSpec s;
  s.time_degree = b.degree;
  s.time_scale = n;
  s.harmonics = b.harmonics;
  s.period = period;
  s.validate();
  return s;
}

void run_fit_margins(const MarginArgs& a, const Common& c)
{
  const nsadf::RawSeries raw = nsadf::io::read_series_csv(a.data);
  const double n = static_cast<double>(raw.size());
  nsadf::MarginOptions mo;
  mo.loc_basis = make_basis(a.loc, n, a.period);
  mo.scale_basis = make_basis(a.scale, n, a.period);
  mo.tail_basis = make_basis(a.tail, n, a.period);
  mo.penalty = a.penalty;
  mo.threshold_quantile = a.threshold_q;
  if ((a.loc.harmonics || a.scale.harmonics || a.tail.harmonics) && raw.day.empty())
    throw nsadf::InvalidArgument("harmonic terms need a day column in " + a.data);

  nsadf::MarginalModel mx, my;
  try {
    mx = nsadf::fit_margin(raw.x, raw.t, raw.day, mo);
    my = nsadf::fit_margin(raw.y, raw.t, raw.day, mo);
  } catch (const nsadf::InvalidArgument& e) {
    throw nsadf::NumericalError("margins", e.what());
  }

  const fs::path dir = prepare_out(c.out);
  json config{{"data", a.data},
              {"loc_basis", nsadf::io::to_json(mo.loc_basis)},
              {"scale_basis", nsadf::io::to_json(mo.scale_basis)},
              {"tail_basis", nsadf::io::to_json(mo.tail_basis)},
              {"threshold_q", a.threshold_q}};
  config["penalty"] = a.penalty ? json(*a.penalty) : json(nullptr);
  config["data_digest"] = nsadf::io::file_digest(a.data);
  nsadf::io::Manifest manifest("fit-margins", config);
  nsadf::io::write_json(dir / "margin_x.json", nsadf::io::to_json(mx));
  manifest.add(dir / "margin_x.json");
  nsadf::io::write_json(dir / "margin_y.json", nsadf::io::to_json(my));
  manifest.add(dir / "margin_y.json");
  manifest.write(dir);
}

// --------------------------------------------------------------- transform

struct TransformArgs
{
  std::string data;
  std::string margin_x;
  std::string margin_y;
};

void run_transform(const TransformArgs& a, const Common& c)
{
  const nsadf::RawSeries raw = nsadf::io::read_series_csv(a.data);
  const auto mx = nsadf::io::margin_from_json(nsadf::io::read_json(a.margin_x));
  const auto my = nsadf::io::margin_from_json(nsadf::io::read_json(a.margin_y));
  const nsadf::ExpSeries e = nsadf::to_exponential(raw, mx, my);

  const fs::path dir = prepare_out(c.out);
  json config{{"data", a.data}, {"margin_x", a.margin_x}, {"margin_y", a.margin_y}};
  config["data_digest"] = nsadf::io::file_digest(a.data);
  config["margin_x_digest"] = nsadf::io::file_digest(a.margin_x);
  config["margin_y_digest"] = nsadf::io::file_digest(a.margin_y);
  nsadf::io::Manifest manifest("transform", config);
  nsadf::io::write_series_csv(dir / "exponential.csv", e);
  manifest.add(dir / "exponential.csv");
  manifest.write(dir);
}

// ----------------------------------------------------------------- fit-adf

struct AdfArgs
{
  std::string data;
  std::size_t rays = 101;
  int m = 30;
  double q_lo = 0.9;
  double q_hi = 0.95;
  double gap = 0.04;
  int qr_degree = 3;
  int qr_harmonics = 0;
  double period = 90.0;
  double v_floor = 1e-6;
  bool bernstein = true;
  int degree = 7;
  std::string link = "exponential";
  int bp_degree = 1;
  int starts = 5;
  std::uint64_t seed = 1;
};

nsadf::Link parse_link(const std::string& s)
{
  if (s == "exponential")
    return nsadf::Link::exponential;
  if (s == "logit")
    return nsadf::Link::logit;
  throw nsadf::InvalidArgument("unknown link '" + s + "' (expected exponential or logit)");
}

void run_fit_adf(const AdfArgs& a, const Common& c)
{
  const nsadf::ExpSeries data = nsadf::io::read_exp_series_csv(a.data);
  const nsadf::RayGrid grid = nsadf::RayGrid::uniform(a.rays);
  const nsadf::QuantileSchedule schedule = nsadf::QuantileSchedule::linear(a.m, a.q_lo, a.q_hi, a.gap);
  grid.validate();
  schedule.validate();
  nsadf::AdfOptions ao;
  ao.basis = nsadf::BasisSpec::polynomial(a.qr_degree, 0.0);
  ao.basis.harmonics = a.qr_harmonics;
  ao.basis.period = a.period;
  ao.v_floor = a.v_floor;
  ao.workers = c.workers;
  nsadf::BernsteinOptions bo;
  bo.degree = a.degree;
  bo.link = parse_link(a.link);
  bo.basis = nsadf::BasisSpec::polynomial(a.bp_degree, 0.0);
  bo.starts = a.starts;
  bo.seed = a.seed;
  bo.workers = c.workers;

  nsadf::AdfGrid g;
  try {
    g = nsadf::lambda_qr_average(data, grid, schedule, ao);
  } catch (const nsadf::InvalidArgument& e) {
    throw nsadf::NumericalError("quantile_regression", e.what());
  }
  std::optional<nsadf::BernsteinFit> fit;
  if (a.bernstein) {
    try {
      fit = nsadf::fit_bernstein(g, bo);
    } catch (const nsadf::InvalidArgument& e) {
      throw nsadf::NumericalError("bernstein", e.what());
    }
  }

  const fs::path dir = prepare_out(c.out);
  json config{{"data", a.data},
              {"data_digest", nsadf::io::file_digest(a.data)},
              {"rays", a.rays},
              {"m", a.m},
              {"q_lo", a.q_lo},
              {"q_hi", a.q_hi},
              {"gap", a.gap},
              {"qr_basis", nsadf::io::to_json(ao.basis)},
              {"v_floor", a.v_floor},
              {"bernstein", a.bernstein},
              {"degree", a.degree},
              {"link", a.link},
              {"bp_basis", nsadf::io::to_json(bo.basis)},
              {"starts", a.starts},
              {"seed", a.seed}};
  nsadf::io::Manifest manifest("fit-adf", config);
  nsadf::io::write_json(dir / "adf_grid.json", nsadf::io::to_json(g));
  manifest.add(dir / "adf_grid.json");

  const auto avg = g.time_average();
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < grid.size(); ++r)
    rows.push_back({fmt(grid.rays[r]), fmt(avg[r]), fmt(nsadf::apply_bounds(avg[r], grid.rays[r]))});
  nsadf::io::write_table_csv(dir / "adf_time_average.csv", "adf_time_average", {"w", "lambda_qr", "lambda_qr_bounded"},
                             rows);
  manifest.add(dir / "adf_time_average.csv");

  nsadf::io::SvgPlot plot{"Angular dependence", "w", "lambda(w)", {}};
  std::vector<double> lb(grid.size());
  for (std::size_t r = 0; r < grid.size(); ++r)
    lb[r] = std::max(grid.rays[r], 1.0 - grid.rays[r]);
  plot.series.push_back({grid.rays, avg, "QR time average", "#555555", true});
  if (fit) {
    nsadf::io::write_json(dir / "bernstein.json", nsadf::io::to_json(fit->model));
    manifest.add(dir / "bernstein.json");
    json summary{{"kind", "bernstein_fit"},
                 {"version", nsadf::io::json_version},
                 {"objective", fit->objective},
                 {"start_objectives", fit->start_objectives},
                 {"converged", fit->converged},
                 {"evaluations", fit->evaluations},
                 {"unconverged_qr_fits", g.unconverged_fits()}};
    nsadf::io::write_json(dir / "bernstein_fit.json", summary);
    manifest.add(dir / "bernstein_fit.json");
    const std::size_t n = g.times();
    const int curves = 5;
    for (int k = 0; k < curves; ++k) {
      const std::size_t ti = (n - 1) * static_cast<std::size_t>(k) / (curves - 1);
      const auto ls = nsadf::lambda_star(fit->model, grid, g.t[ti], g.day.empty() ? 0.0 : g.day[ti]);
      plot.series.push_back({grid.rays, ls, "BP t=" + fmt(g.t[ti]), nsadf::io::ramp_color(k / (curves - 1.0))});
    }
  }
  plot.series.push_back({grid.rays, lb, "lower bound", "#000000", true});
  nsadf::io::write_text(dir / "adf.svg", nsadf::io::emit_svg(plot));
  manifest.add(dir / "adf.svg");
  manifest.write(dir);
}

// ------------------------------------------------------------ return-curve

struct CurveArgs
{
  std::string grid;
  std::string model;
  std::string margin_x;
  std::string margin_y;
  double p = 1e-3;
  std::vector<double> times;
  double day = 0.0;
  std::string margin = "exp";
};

std::string curve_name(const std::string& prefix, double t)
{
  return prefix + "_t" + fmt(t) + ".csv";
}

void run_return_curve(const CurveArgs& a, const Common& c)
{
  if (a.margin != "exp" && a.margin != "original")
    throw nsadf::InvalidArgument("--margin must be exp or original");
  const bool original = a.margin == "original";
  if (original && (a.margin_x.empty() || a.margin_y.empty()))
    throw nsadf::InvalidArgument("--margin original needs --margin-x and --margin-y");
  if (a.times.empty())
    throw nsadf::InvalidArgument("at least one --t is required");
  const nsadf::AdfGrid g = nsadf::io::grid_from_json(nsadf::io::read_json(a.grid));
  std::optional<nsadf::BernsteinModel> model;
  if (!a.model.empty())
    model = nsadf::io::bernstein_from_json(nsadf::io::read_json(a.model));
  std::optional<nsadf::MarginalModel> mx, my;
  if (original) {
    mx = nsadf::io::margin_from_json(nsadf::io::read_json(a.margin_x));
    my = nsadf::io::margin_from_json(nsadf::io::read_json(a.margin_y));
  }

  const fs::path dir = prepare_out(c.out);
  json config{{"grid", a.grid},           {"grid_digest", nsadf::io::file_digest(a.grid)},
              {"model", a.model},         {"margin_x", a.margin_x},
              {"margin_y", a.margin_y},   {"p", a.p},
              {"t", a.times},             {"day", a.day},
              {"margin", a.margin}};
  if (model)
    config["model_digest"] = nsadf::io::file_digest(a.model);
  nsadf::io::Manifest manifest("return-curve", config);

  nsadf::io::SvgPlot plot{"Return curves, p = " + fmt(a.p), original ? "x" : "x (exponential)",
                          original ? "y" : "y (exponential)", {}};
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    const double t = a.times[k];
    std::vector<double> ls;
    if (model) {
      ls = nsadf::lambda_star(*model, g.grid, t, a.day);
    } else {
      std::size_t ti = g.times();
      for (std::size_t i = 0; i < g.times(); ++i)
        if (g.t[i] == t)
          ti = i;
      if (ti == g.times())
        throw nsadf::InvalidArgument("t = " + fmt(t) + " is not a time of the ADF grid (pass --model to evaluate anywhere)");
      ls = nsadf::lambda_star(g, ti);
    }
    nsadf::ReturnCurve curve;
    try {
      curve = nsadf::enforce_ordering(nsadf::exp_curve_averaged(g, ls, a.p, t, a.day));
      if (original)
        curve = nsadf::enforce_ordering(nsadf::back_transform(curve, *mx, *my));
    } catch (const nsadf::InvalidArgument& e) {
      throw nsadf::NumericalError("return_curve", e.what());
    }
    const fs::path path = dir / curve_name("curve", t);
    nsadf::io::write_curve_csv(path, curve);
    manifest.add(path);
    nsadf::io::SvgSeries s;
    s.label = "t=" + fmt(t);
    s.color = nsadf::io::ramp_color(a.times.size() == 1 ? 0.0 : k / (a.times.size() - 1.0));
    for (const auto& pt : curve.points) {
      s.x.push_back(pt.x);
      s.y.push_back(pt.y);
    }
    plot.series.push_back(std::move(s));
  }
  nsadf::io::write_text(dir / "curves.svg", nsadf::io::emit_svg(plot));
  manifest.add(dir / "curves.svg");
  manifest.write(dir);
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs
{
  std::string family = "inv_logistic";
  std::size_t n = 10000;
  int replicates = 50;
  std::uint64_t seed = 1;
  std::vector<double> times;
  std::size_t rays = 101;
  int m = 30;
  int qr_degree = 3;
  bool bernstein = true;
};

void run_evaluate(const EvaluateArgs& a, const Common& c)
{
  nsadf::ReplicationConfig cfg;
  cfg.spec.family = nsadf::parse_family(a.family);
  cfg.spec.n = a.n;
  cfg.replicates = a.replicates;
  cfg.base_seed = a.seed;
  cfg.times = a.times.empty() ? std::vector<double>{std::floor(a.n / 2.0)} : a.times;
  cfg.grid = nsadf::RayGrid::uniform(a.rays);
  cfg.schedule = nsadf::QuantileSchedule::linear(a.m);
  cfg.adf.basis = nsadf::BasisSpec::polynomial(a.qr_degree, 0.0);
  cfg.fit_bernstein = a.bernstein;
  cfg.workers = c.workers;
  if (cfg.spec.family == nsadf::Family::gauge_model12)
    cfg.mcmc = nsadf::McmcConfig{};
  if (a.replicates < 2)
    throw nsadf::InvalidArgument("evaluate needs at least 2 replicates");
  for (double t : cfg.times)
    if (!(t >= 1.0 && t <= static_cast<double>(a.n)) || t != std::floor(t))
      throw nsadf::InvalidArgument("evaluation times must be integers in [1, n]");

  const nsadf::ReplicationResult res = nsadf::run_replications(cfg);

  const fs::path dir = prepare_out(c.out);
  json config{{"family", a.family}, {"n", a.n},        {"replicates", a.replicates}, {"seed", a.seed},
              {"t", cfg.times},     {"rays", a.rays},  {"m", a.m},                   {"qr_degree", a.qr_degree},
              {"bernstein", a.bernstein}};
  nsadf::io::Manifest manifest("evaluate", config);

  std::vector<std::vector<std::string>> mrows;
  for (std::size_t col = 0; col < cfg.times.size(); ++col) {
    std::vector<std::string> row{fmt(cfg.times[col]), fmt(nsadf::mise(res.qr, col))};
    row.push_back(a.bernstein ? fmt(nsadf::mise(res.bp, col)) : "nan");
    mrows.push_back(std::move(row));

    std::vector<std::vector<double>> qr, bp;
    for (std::size_t r = 0; r < res.qr.replicates(); ++r) {
      qr.push_back(res.qr.profile(r, col));
      if (a.bernstein)
        bp.push_back(res.bp.profile(r, col));
    }
    const auto eq = nsadf::envelope(qr);
    const auto truth = res.qr.truth_profile(col);
    std::vector<std::vector<std::string>> erows;
    std::optional<nsadf::Envelope> eb;
    if (a.bernstein)
      eb = nsadf::envelope(bp);
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
      std::vector<std::string> row2{fmt(cfg.grid.rays[i]), fmt(truth[i]), fmt(eq.bands[0][i]), fmt(eq.bands[1][i]),
                                    fmt(eq.bands[2][i])};
      for (int k = 0; k < 3; ++k)
        row2.push_back(eb ? fmt(eb->bands[static_cast<std::size_t>(k)][i]) : "nan");
      erows.push_back(std::move(row2));
    }
    const fs::path ep = dir / ("envelope_t" + fmt(cfg.times[col]) + ".csv");
    nsadf::io::write_table_csv(ep, "envelope",
                               {"w", "truth", "qr_lo", "qr_median", "qr_hi", "bp_lo", "bp_median", "bp_hi"}, erows);
    manifest.add(ep);

    nsadf::io::SvgPlot plot{"Replicate envelope, t = " + fmt(cfg.times[col]), "w", "lambda(w)", {}};
    plot.series.push_back({cfg.grid.rays, truth, "truth", "#000000", false});
    plot.series.push_back({cfg.grid.rays, eq.bands[1], "QR median", "#d7191c", false});
    plot.series.push_back({cfg.grid.rays, eq.bands[0], "QR 2.5%", "#d7191c", true});
    plot.series.push_back({cfg.grid.rays, eq.bands[2], "QR 97.5%", "#d7191c", true});
    if (eb) {
      plot.series.push_back({cfg.grid.rays, eb->bands[1], "BP median", "#2c7bb6", false});
      plot.series.push_back({cfg.grid.rays, eb->bands[0], "BP 2.5%", "#2c7bb6", true});
      plot.series.push_back({cfg.grid.rays, eb->bands[2], "BP 97.5%", "#2c7bb6", true});
    }
    const fs::path sp = dir / ("envelope_t" + fmt(cfg.times[col]) + ".svg");
    nsadf::io::write_text(sp, nsadf::io::emit_svg(plot));
    manifest.add(sp);
  }
  nsadf::io::write_table_csv(dir / "mise.csv", "mise", {"t", "mise_qr", "mise_bp"}, mrows);
  manifest.add(dir / "mise.csv");
  manifest.write(dir);
}

// -------------------------------------------------------------- case-study

struct CaseArgs
{
  std::string config;
  std::string data;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> bootstrap;
};

void margin_generator_from_json(const json& j, nsadf::MarginGenerator& g, const std::string& ctx)
{
  nsadf::io::reject_unknown_keys(j,
                                 {"loc0", "loc_trend", "harm_sin", "harm_cos", "log_scale0", "log_scale_trend",
                                  "gpd_tail", "tail_q", "tail_tau", "tail_xi"},
                                 ctx);
  g.loc0 = j.value("loc0", g.loc0);
  g.loc_trend = j.value("loc_trend", g.loc_trend);
  g.harm_sin = j.value("harm_sin", g.harm_sin);
  g.harm_cos = j.value("harm_cos", g.harm_cos);
  g.log_scale0 = j.value("log_scale0", g.log_scale0);
  g.log_scale_trend = j.value("log_scale_trend", g.log_scale_trend);
  g.gpd_tail = j.value("gpd_tail", g.gpd_tail);
  g.tail_q = j.value("tail_q", g.tail_q);
  g.tail_tau = j.value("tail_tau", g.tail_tau);
  g.tail_xi = j.value("tail_xi", g.tail_xi);
}

json margin_generator_to_json(const nsadf::MarginGenerator& g)
{
  return json{{"loc0", g.loc0},
              {"loc_trend", g.loc_trend},
              {"harm_sin", g.harm_sin},
              {"harm_cos", g.harm_cos},
              {"log_scale0", g.log_scale0},
              {"log_scale_trend", g.log_scale_trend},
              {"gpd_tail", g.gpd_tail},
              {"tail_q", g.tail_q},
              {"tail_tau", g.tail_tau},
              {"tail_xi", g.tail_xi}};
}

void case_config_from_json(const json& j, nsadf::SurrogateSpec& s, nsadf::CaseConfig& cfg)
{
  nsadf::io::reject_unknown_keys(j, {"surrogate", "case"}, "case-study config");
  if (j.contains("surrogate")) {
    const json& sj = j.at("surrogate");
    nsadf::io::reject_unknown_keys(sj, {"n_years", "obs_per_year", "x", "y", "r_start", "r_end", "seed", "null"},
                                   "surrogate");
    if (sj.value("null", false))
      s = nsadf::SurrogateSpec::null_spec(sj.value("r_start", 0.6));
    s.n_years = sj.value("n_years", s.n_years);
    s.obs_per_year = sj.value("obs_per_year", s.obs_per_year);
    s.r_start = sj.value("r_start", s.r_start);
    s.r_end = sj.value("r_end", s.r_end);
    s.seed = sj.value("seed", s.seed);
    if (sj.contains("x"))
      margin_generator_from_json(sj.at("x"), s.x, "surrogate.x");
    if (sj.contains("y"))
      margin_generator_from_json(sj.at("y"), s.y, "surrogate.y");
  }
  if (j.contains("case")) {
    const json& cj = j.at("case");
    nsadf::io::reject_unknown_keys(cj,
                                   {"obs_per_year", "years", "curve_day", "return_period_years", "rays", "m",
                                    "bernstein_degree", "eta_half_window", "eta_threshold_q", "eta_step",
                                    "bootstrap_resamples", "bootstrap_segment", "bootstrap_block", "bootstrap_seed",
                                    "threshold_q"},
                                   "case");
    cfg.obs_per_year = cj.value("obs_per_year", cfg.obs_per_year);
    cfg.years = cj.value("years", cfg.years);
    cfg.curve_day = cj.value("curve_day", cfg.curve_day);
    cfg.return_period_years = cj.value("return_period_years", cfg.return_period_years);
    if (cj.contains("rays"))
      cfg.grid = nsadf::RayGrid::uniform(cj.at("rays").get<std::size_t>());
    if (cj.contains("m"))
      cfg.schedule = nsadf::QuantileSchedule::linear(cj.at("m").get<int>());
    cfg.bernstein.degree = cj.value("bernstein_degree", cfg.bernstein.degree);
    cfg.eta_half_window = cj.value("eta_half_window", cfg.eta_half_window);
    cfg.eta_threshold_q = cj.value("eta_threshold_q", cfg.eta_threshold_q);
    cfg.eta_step = cj.value("eta_step", cfg.eta_step);
    cfg.bootstrap.resamples = cj.value("bootstrap_resamples", cfg.bootstrap.resamples);
    cfg.bootstrap.segment_len = cj.value("bootstrap_segment", cfg.bootstrap.segment_len);
    cfg.bootstrap.block_len = cj.value("bootstrap_block", cfg.bootstrap.block_len);
    cfg.bootstrap.seed = cj.value("bootstrap_seed", cfg.bootstrap.seed);
    cfg.margins.threshold_quantile = cj.value("threshold_q", cfg.margins.threshold_quantile);
  }
  for (auto* b : {&cfg.margins.loc_basis, &cfg.margins.scale_basis, &cfg.margins.tail_basis})
    b->period = cfg.obs_per_year;
}

void run_case_study(const CaseArgs& a, const Common& c)
{
  nsadf::SurrogateSpec spec;
  nsadf::CaseConfig cfg;
  if (!a.config.empty())
    case_config_from_json(nsadf::io::read_json(a.config), spec, cfg);
  if (a.seed)
    spec.seed = *a.seed;
  if (a.bootstrap)
    cfg.bootstrap.resamples = *a.bootstrap;
  cfg.workers = c.workers;
  cfg.validate();

  const fs::path dir = prepare_out(c.out);
  json config{{"config", a.config}, {"data", a.data}};
  if (!a.config.empty())
    config["config_digest"] = nsadf::io::file_digest(a.config);
  json sj{{"n_years", spec.n_years},
          {"obs_per_year", spec.obs_per_year},
          {"x", margin_generator_to_json(spec.x)},
          {"y", margin_generator_to_json(spec.y)},
          {"r_start", spec.r_start},
          {"r_end", spec.r_end},
          {"seed", spec.seed}};
  config["surrogate"] = a.data.empty() ? sj : json(nullptr);
  config["years"] = cfg.years;
  config["curve_day"] = cfg.curve_day;
  config["p"] = cfg.probability();
  config["bootstrap"] = json{{"resamples", cfg.bootstrap.resamples},
                             {"segment", cfg.bootstrap.segment_len},
                             {"block", cfg.bootstrap.block_len},
                             {"seed", cfg.bootstrap.seed}};
  nsadf::io::Manifest manifest("case-study", config);

  nsadf::RawSeries raw;
  if (a.data.empty()) {
    raw = nsadf::generate_surrogate(spec);
    nsadf::io::write_series_csv(dir / "data.csv", raw);
    manifest.add(dir / "data.csv");
  } else {
    raw = nsadf::io::read_series_csv(a.data);
    config["data_digest"] = nsadf::io::file_digest(a.data);
  }

  // Artifacts are written as each stage finishes, so a failing stage leaves
  // the earlier ones (and a manifest listing them) behind.
  auto persist = [&](const std::string& stage, const nsadf::CaseResult& r) {
    std::cerr << "case-study: " << stage << " done\n";
    if (stage == "margins") {
      nsadf::io::write_json(dir / "margin_x.json", nsadf::io::to_json(r.margin_x));
      manifest.add(dir / "margin_x.json");
      nsadf::io::write_json(dir / "margin_y.json", nsadf::io::to_json(r.margin_y));
      manifest.add(dir / "margin_y.json");
    } else if (stage == "transform") {
      nsadf::io::write_series_csv(dir / "exponential.csv", r.exponential);
      manifest.add(dir / "exponential.csv");
    } else if (stage == "adf") {
      nsadf::io::write_json(dir / "adf_grid.json", nsadf::io::to_json(r.grid));
      manifest.add(dir / "adf_grid.json");
    } else if (stage == "bernstein") {
      nsadf::io::write_json(dir / "bernstein.json", nsadf::io::to_json(r.bernstein.model));
      manifest.add(dir / "bernstein.json");
    } else if (stage == "return_curves") {
      nsadf::io::SvgPlot exp_plot{"Return curves (exponential margins)", "x", "y", {}};
      nsadf::io::SvgPlot orig_plot{"Return curves (original margins)", "x", "y", {}};
      const std::size_t nc = r.curves_original.size();
      for (std::size_t k = 0; k < nc; ++k) {
        const std::string year = std::to_string(cfg.years[k]);
        const fs::path pe = dir / ("curve_exp_year" + year + ".csv");
        const fs::path po = dir / ("curve_original_year" + year + ".csv");
        nsadf::io::write_curve_csv(pe, r.curves_exponential[k]);
        nsadf::io::write_curve_csv(po, r.curves_original[k]);
        manifest.add(pe);
        manifest.add(po);
        const std::string colour = nsadf::io::ramp_color(nc == 1 ? 0.0 : k / (nc - 1.0));
        for (auto [plot, curve] : {std::pair{&exp_plot, &r.curves_exponential[k]}, std::pair{&orig_plot, &r.curves_original[k]}}) {
          nsadf::io::SvgSeries s;
          s.label = "year " + year;
          s.color = colour;
          for (const auto& pt : curve->points) {
            s.x.push_back(pt.x);
            s.y.push_back(pt.y);
          }
          plot->series.push_back(std::move(s));
        }
      }
      nsadf::io::write_text(dir / "curves_exp.svg", nsadf::io::emit_svg(exp_plot));
      manifest.add(dir / "curves_exp.svg");
      nsadf::io::write_text(dir / "curves_original.svg", nsadf::io::emit_svg(orig_plot));
      manifest.add(dir / "curves_original.svg");
    } else if (stage == "eta") {
      std::vector<std::vector<std::string>> rows;
      nsadf::io::SvgSeries emp{{}, {}, "rolling eta", "#d7191c", false};
      nsadf::io::SvgSeries lo{{}, {}, "95% interval", "#d7191c", true};
      nsadf::io::SvgSeries hi{{}, {}, "", "#d7191c", true};
      nsadf::io::SvgSeries mod{{}, {}, "model eta", "#2c7bb6", false};
      for (std::size_t i = 0; i < r.rolling.size(); ++i) {
        const auto& e = r.rolling[i];
        rows.push_back({fmt(e.t), fmt(e.eta), fmt(e.lower), fmt(e.upper), fmt(r.model_eta[i]),
                        std::to_string(e.exceedances), e.sparse ? "1" : "0"});
        for (auto* s : {&emp, &lo, &hi, &mod})
          s->x.push_back(e.t);
        emp.y.push_back(e.eta);
        lo.y.push_back(e.lower);
        hi.y.push_back(e.upper);
        mod.y.push_back(r.model_eta[i]);
      }
      nsadf::io::write_table_csv(dir / "eta.csv", "eta_comparison",
                                 {"t", "eta_rolling", "lower", "upper", "eta_model", "exceedances", "sparse"}, rows);
      manifest.add(dir / "eta.csv");
      nsadf::io::SvgPlot plot{"Rolling and model eta", "t", "eta", {emp, lo, hi, mod}};
      nsadf::io::write_text(dir / "eta.svg", nsadf::io::emit_svg(plot));
      manifest.add(dir / "eta.svg");
    } else if (stage == "bootstrap") {
      const auto& b = *r.bootstrap_band;
      std::vector<std::vector<std::string>> rows;
      const auto mid = nsadf::lambda_star(r.bernstein.model, cfg.grid, static_cast<double>(raw.size() / 2));
      for (std::size_t i = 0; i < cfg.grid.size(); ++i)
        rows.push_back({fmt(cfg.grid.rays[i]), fmt(mid[i]), fmt(b.bands[0][i]), fmt(b.bands[1][i]), fmt(b.bands[2][i])});
      nsadf::io::write_table_csv(dir / "bootstrap_band.csv", "bootstrap_band", {"w", "lambda", "lo", "median", "hi"},
                                 rows);
      manifest.add(dir / "bootstrap_band.csv");
      nsadf::io::SvgPlot plot{"Bootstrap band at t = n/2", "w", "lambda(w)", {}};
      plot.series.push_back({cfg.grid.rays, mid, "fit", "#000000", false});
      plot.series.push_back({cfg.grid.rays, b.bands[0], "2.5%", "#2c7bb6", true});
      plot.series.push_back({cfg.grid.rays, b.bands[2], "97.5%", "#2c7bb6", true});
      nsadf::io::write_text(dir / "bootstrap_band.svg", nsadf::io::emit_svg(plot));
      manifest.add(dir / "bootstrap_band.svg");
    }
    manifest.write(dir);
  };

  manifest.write(dir);
  nsadf::run_case_pipeline(raw, cfg, persist);
}

void add_basis_flags(CLI::App* app, const std::string& name, BasisArgs& b)
{
  app->add_option("--" + name + "-degree", b.degree, "Polynomial degree in t for the " + name + " basis")
    ->check(CLI::Range(0, 10))
    ->capture_default_str();
  app->add_option("--" + name + "-harmonics", b.harmonics, "Harmonic pairs in day for the " + name + " basis")
    ->check(CLI::Range(0, 10))
    ->capture_default_str();
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Non-stationary angular dependence and return curves for bivariate extremes"};
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  try {
    common.workers = default_workers();
  } catch (const nsadf::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_config;
  }
  app.add_option("--workers", common.workers, "Worker threads (0 = all cores; default from NSADF_WORKERS)")
    ->check(CLI::NonNegativeNumber)
    ->capture_default_str();
  app.add_option("--out", common.out, "Output directory")->capture_default_str();

  SimulateArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "Simulate a bivariate series on exponential margins");
  s_sim->add_option("--family", sim.family, "gaussian_pos|gaussian_neg|inv_logistic|inv_alog|inv_husler_reiss|gauge_model12")
    ->capture_default_str();
  s_sim->add_option("--n", sim.n, "Series length")->check(CLI::PositiveNumber)->capture_default_str();
  s_sim->add_option("--seed", sim.seed, "Seed")->capture_default_str();
  s_sim->add_option("--frozen", sim.frozen, "Hold the dependence parameter fixed at this value");
  s_sim->add_option("--kappa1", sim.kappa1, "Asymmetric logistic weight 1")->capture_default_str();
  s_sim->add_option("--kappa2", sim.kappa2, "Asymmetric logistic weight 2")->capture_default_str();
  s_sim->add_option("--burn-in", sim.burn_in, "MCMC burn-in (gauge_model12)")->check(CLI::NonNegativeNumber)->capture_default_str();
  s_sim->add_option("--thin", sim.thin, "MCMC thinning (gauge_model12)")->check(CLI::PositiveNumber)->capture_default_str();
  s_sim->add_option("--proposal-sd", sim.proposal_sd, "Initial MCMC proposal scale")->check(CLI::PositiveNumber)->capture_default_str();

  MarginArgs mar;
  auto* s_mar = app.add_subcommand("fit-margins", "Fit location-scale margins with GPD residual tails");
  s_mar->add_option("--data", mar.data, "Raw series CSV")->required()->check(CLI::ExistingFile);
  add_basis_flags(s_mar, "loc", mar.loc);
  add_basis_flags(s_mar, "scale", mar.scale);
  add_basis_flags(s_mar, "tail", mar.tail);
  s_mar->add_option("--period", mar.period, "Day-of-year period for harmonics")->check(CLI::PositiveNumber)->capture_default_str();
  s_mar->add_option("--threshold-q", mar.threshold_q, "Residual tail threshold quantile")->check(CLI::Range(0.5, 0.999))->capture_default_str();
  s_mar->add_option("--penalty", mar.penalty, "Ridge penalty (default: chosen by GCV)");

  TransformArgs tra;
  auto* s_tra = app.add_subcommand("transform", "Map a raw series to standard exponential margins");
  s_tra->add_option("--data", tra.data, "Raw series CSV")->required()->check(CLI::ExistingFile);
  s_tra->add_option("--margin-x", tra.margin_x, "Marginal model JSON for x")->required()->check(CLI::ExistingFile);
  s_tra->add_option("--margin-y", tra.margin_y, "Marginal model JSON for y")->required()->check(CLI::ExistingFile);

  AdfArgs adf;
  auto* s_adf = app.add_subcommand("fit-adf", "Quantile-regression ADF grid and Bernstein model");
  s_adf->add_option("--data", adf.data, "Exponential-margin series CSV")->required()->check(CLI::ExistingFile);
  s_adf->add_option("--rays", adf.rays, "Number of rays on [0,1]")->check(CLI::Range(3, 10001))->capture_default_str();
  s_adf->add_option("--m", adf.m, "Quantile pairs")->check(CLI::Range(1, 1000))->capture_default_str();
  s_adf->add_option("--q-lo", adf.q_lo, "Lowest q1")->capture_default_str();
  s_adf->add_option("--q-hi", adf.q_hi, "Highest q1")->capture_default_str();
  s_adf->add_option("--gap", adf.gap, "q2 - q1")->capture_default_str();
  s_adf->add_option("--qr-degree", adf.qr_degree, "Polynomial degree in t of the QR basis")->check(CLI::Range(0, 10))->capture_default_str();
  s_adf->add_option("--qr-harmonics", adf.qr_harmonics, "Harmonic pairs in day of the QR basis")->check(CLI::Range(0, 10))->capture_default_str();
  s_adf->add_option("--period", adf.period, "Day-of-year period")->check(CLI::PositiveNumber)->capture_default_str();
  s_adf->add_option("--v-floor", adf.v_floor, "Floor on quantile spacings")->check(CLI::PositiveNumber)->capture_default_str();
  s_adf->add_flag("!--no-bernstein", adf.bernstein, "Skip the Bernstein fit");
  s_adf->add_option("--degree", adf.degree, "Bernstein degree k")->check(CLI::Range(2, 15))->capture_default_str();
  s_adf->add_option("--link", adf.link, "exponential|logit")->capture_default_str();
  s_adf->add_option("--bp-degree", adf.bp_degree, "Polynomial degree in t of the coefficient functions")->check(CLI::Range(0, 10))->capture_default_str();
  s_adf->add_option("--starts", adf.starts, "Optimizer starts")->check(CLI::Range(1, 100))->capture_default_str();
  s_adf->add_option("--seed", adf.seed, "Seed for start jitter")->capture_default_str();

  CurveArgs cur;
  auto* s_cur = app.add_subcommand("return-curve", "Return curves from a fitted ADF");
  s_cur->add_option("--grid", cur.grid, "ADF grid JSON (thresholds)")->required()->check(CLI::ExistingFile);
  s_cur->add_option("--model", cur.model, "Bernstein model JSON (default: pointwise grid values)")->check(CLI::ExistingFile);
  s_cur->add_option("--margin-x", cur.margin_x, "Marginal model JSON for x")->check(CLI::ExistingFile);
  s_cur->add_option("--margin-y", cur.margin_y, "Marginal model JSON for y")->check(CLI::ExistingFile);
  s_cur->add_option("--p", cur.p, "Joint survival probability")->check(CLI::Range(1e-300, 1.0))->capture_default_str();
  s_cur->add_option("--t", cur.times, "Time index (repeatable)")->required();
  s_cur->add_option("--day", cur.day, "Day index")->capture_default_str();
  s_cur->add_option("--margin", cur.margin, "exp|original")->capture_default_str();

  EvaluateArgs ev;
  auto* s_ev = app.add_subcommand("evaluate", "Replication study: MISE and envelopes against the true ADF");
  s_ev->add_option("--family", ev.family, "Copula family")->capture_default_str();
  s_ev->add_option("--n", ev.n, "Series length")->check(CLI::PositiveNumber)->capture_default_str();
  s_ev->add_option("--replicates", ev.replicates, "Replicates")->capture_default_str();
  s_ev->add_option("--seed", ev.seed, "Base seed")->capture_default_str();
  s_ev->add_option("--t", ev.times, "Evaluation time (repeatable; default n/2)");
  s_ev->add_option("--rays", ev.rays, "Number of rays")->check(CLI::Range(3, 10001))->capture_default_str();
  s_ev->add_option("--m", ev.m, "Quantile pairs")->check(CLI::Range(1, 1000))->capture_default_str();
  s_ev->add_option("--qr-degree", ev.qr_degree, "Polynomial degree in t of the QR basis")->check(CLI::Range(0, 10))->capture_default_str();
  s_ev->add_flag("!--no-bernstein", ev.bernstein, "Skip the Bernstein fits");

  CaseArgs cs;
  auto* s_cs = app.add_subcommand("case-study", "End-to-end pipeline on the synthetic surrogate or a CSV");
  s_cs->add_option("--config", cs.config, "JSON with optional \"surrogate\" and \"case\" blocks")->check(CLI::ExistingFile);
  s_cs->add_option("--data", cs.data, "Raw series CSV with a day column (replaces the surrogate)")->check(CLI::ExistingFile);
  s_cs->add_option("--seed", cs.seed, "Surrogate seed");
  s_cs->add_option("--bootstrap", cs.bootstrap, "Bootstrap resamples (0 skips the band)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto parsed = app.get_subcommands();
    std::cerr << (parsed.empty() ? app.help() : parsed.back()->help());
    return exit_config;
  }

  try {
    if (*s_sim)
      run_simulate(sim, common);
    else if (*s_mar)
      run_fit_margins(mar, common);
    else if (*s_tra)
      run_transform(tra, common);
    else if (*s_adf)
      run_fit_adf(adf, common);
    else if (*s_cur)
      run_return_curve(cur, common);
    else if (*s_ev)
      run_evaluate(ev, common);
    else if (*s_cs)
      run_case_study(cs, common);
  } catch (const nsadf::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return exit_config;
  } catch (const nsadf::NumericalError& e) {
    std::cerr << "numerical failure in stage '" << e.stage() << "': " << e.what() << "\n";
    return exit_numerical;
  } catch (const nsadf::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return exit_io;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return exit_io;
  }
  return 0;
}
