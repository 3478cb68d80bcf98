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


#include "nsadf/io.hpp"

#include "nsadf/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace nsadf::io {

namespace fs = std::filesystem;

std::string format_double(double v)
{
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view text)
{
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
    text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (text == "nan")
    return std::nan("");
  if (text == "inf")
    return std::numeric_limits<double>::infinity();
  if (text == "-inf")
    return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size())
    throw InvalidArgument("not a number: '" + std::string(text) + "'");
  return v;
}

namespace {

std::ofstream open_out(const fs::path& path)
{
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read " + path.string());
  return in;
}

std::vector<std::string_view> split(std::string_view line, char sep = ',')
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

std::string trim(std::string s)
{
  while (!s.empty() && (s.back() == '\r' || s.back() == ' '))
    s.pop_back();
  while (!s.empty() && s.front() == ' ')
    s.erase(s.begin());
  return s;
}

// Parses "# nsadf <kind> v<N>"; returns false when the line is not a version line.
bool version_line(const std::string& line, const std::string& kind, const fs::path& path)
{
  const std::string prefix = "# nsadf ";
  if (line.rfind(prefix, 0) != 0)
    return false;
  std::istringstream ss(line.substr(prefix.size()));
  std::string k, v;
  ss >> k >> v;
  if (k != kind)
    throw InvalidArgument(path.string() + ": expected a " + kind + " file, found " + k);
  if (v != "v" + std::to_string(csv_version))
    throw InvalidArgument(path.string() + ": unsupported " + kind + " schema version " + v);
  return true;
}

std::vector<double> to_vector(const Eigen::VectorXd& v)
{
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd to_eigen(const json& j)
{
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

void write_series_csv(const fs::path& path,
                      const std::vector<double>& t,
                      const std::vector<double>& day,
                      const std::vector<double>& x,
                      const std::vector<double>& y)
{
  if (t.size() != x.size() || y.size() != x.size() || (!day.empty() && day.size() != x.size()))
    throw InvalidArgument("series columns differ in length");
  auto out = open_out(path);
  out << "# nsadf series v" << csv_version << "\n";
  out << (day.empty() ? "t,x,y\n" : "t,day,x,y\n");
  for (std::size_t i = 0; i < x.size(); ++i) {
    out << format_double(t[i]) << ',';
    if (!day.empty())
      out << format_double(day[i]) << ',';
    out << format_double(x[i]) << ',' << format_double(y[i]) << '\n';
  }
  if (!out)
    throw IoError("failed writing " + path.string());
}

void write_series_csv(const fs::path& path, const ExpSeries& s)
{
  write_series_csv(path, s.t, s.day, s.x, s.y);
}

void write_series_csv(const fs::path& path, const RawSeries& s)
{
  write_series_csv(path, s.t, s.day, s.x, s.y);
}

RawSeries read_series_csv(const fs::path& path)
{
  auto in = open_in(path);
  std::string line;
  RawSeries s;
  bool header_seen = false;
  int col_t = -1, col_day = -1, col_x = -1, col_y = -1;
  std::size_t ncols = 0;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty())
      continue;
    if (line[0] == '#') {
      if (!header_seen)
        version_line(line, "series", path);
      continue;
    }
    const auto cells = split(line);
    if (!header_seen) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        const std::string name = trim(std::string(cells[c]));
        int* slot = name == "t" ? &col_t : name == "day" ? &col_day : name == "x" ? &col_x : name == "y" ? &col_y : nullptr;
        if (!slot)
          throw InvalidArgument(path.string() + ": unexpected column '" + name + "'");
        *slot = static_cast<int>(c);
      }
      if (col_t < 0 || col_x < 0 || col_y < 0)
        throw InvalidArgument(path.string() + ": header must contain t, x and y");
      ncols = cells.size();
      header_seen = true;
      continue;
    }
    if (cells.size() != ncols)
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": wrong number of fields");
    try {
      s.t.push_back(parse_double(cells[static_cast<std::size_t>(col_t)]));
      if (col_day >= 0)
        s.day.push_back(parse_double(cells[static_cast<std::size_t>(col_day)]));
      s.x.push_back(parse_double(cells[static_cast<std::size_t>(col_x)]));
      s.y.push_back(parse_double(cells[static_cast<std::size_t>(col_y)]));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!header_seen)
    throw InvalidArgument(path.string() + ": no header line");
  s.validate();
  return s;
}

ExpSeries read_exp_series_csv(const fs::path& path)
{
  RawSeries r = read_series_csv(path);
  ExpSeries e;
  e.t = std::move(r.t);
  e.day = std::move(r.day);
  e.x = std::move(r.x);
  e.y = std::move(r.y);
  e.validate(true);
  return e;
}

void write_curve_csv(const fs::path& path, const ReturnCurve& curve)
{
  auto out = open_out(path);
  out << "# nsadf curve v" << csv_version << "\n";
  out << "# p=" << format_double(curve.p) << " t=" << format_double(curve.t) << " day=" << format_double(curve.day)
      << " margin=" << (curve.margin == Margin::exponential ? "exponential" : "original") << "\n";
  out << "w,x,y,clamped\n";
  for (const auto& pt : curve.points)
    out << format_double(pt.w) << ',' << format_double(pt.x) << ',' << format_double(pt.y) << ','
        << (pt.clamped ? 1 : 0) << '\n';
  if (!out)
    throw IoError("failed writing " + path.string());
}

ReturnCurve read_curve_csv(const fs::path& path)
{
  auto in = open_in(path);
  std::string line;
  ReturnCurve c;
  bool versioned = false, header = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty())
      continue;
    if (line[0] == '#') {
      if (!versioned) {
        versioned = version_line(line, "curve", path);
        continue;
      }
      std::istringstream ss(line.substr(1));
      std::string kv;
      while (ss >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
          continue;
        const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
        if (k == "p")
          c.p = parse_double(v);
        else if (k == "t")
          c.t = parse_double(v);
        else if (k == "day")
          c.day = parse_double(v);
        else if (k == "margin")
          c.margin = v == "original" ? Margin::original : Margin::exponential;
      }
      continue;
    }
    if (!header) {
      if (line != "w,x,y,clamped")
        throw InvalidArgument(path.string() + ": unexpected curve header");
      header = true;
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != 4)
      throw InvalidArgument(path.string() + ": wrong number of fields");
    c.points.push_back({parse_double(cells[0]), parse_double(cells[1]), parse_double(cells[2]), cells[3] == "1"});
  }
  if (!header)
    throw InvalidArgument(path.string() + ": no header line");
  return c;
}

void write_table_csv(const fs::path& path,
                     const std::string& kind,
                     const std::vector<std::string>& columns,
                     const std::vector<std::vector<std::string>>& rows)
{
  auto out = open_out(path);
  out << "# nsadf " << kind << " v" << csv_version << "\n";
  for (std::size_t c = 0; c < columns.size(); ++c)
    out << (c ? "," : "") << columns[c];
  out << '\n';
  for (const auto& r : rows) {
    if (r.size() != columns.size())
      throw InvalidArgument("table row has the wrong number of cells");
    for (std::size_t c = 0; c < r.size(); ++c)
      out << (c ? "," : "") << r[c];
    out << '\n';
  }
  if (!out)
    throw IoError("failed writing " + path.string());
}

json to_json(const BasisSpec& b)
{
  return json{{"intercept", b.intercept},
              {"time_degree", b.time_degree},
              {"time_scale", b.time_scale},
              {"harmonics", b.harmonics},
              {"period", b.period}};
}

BasisSpec basis_from_json(const json& j)
{
  reject_unknown_keys(j, {"intercept", "time_degree", "time_scale", "harmonics", "period"}, "basis");
  BasisSpec b;
  b.intercept = j.value("intercept", true);
  b.time_degree = j.value("time_degree", 0);
  b.time_scale = j.value("time_scale", 1.0);
  b.harmonics = j.value("harmonics", 0);
  b.period = j.value("period", 90.0);
  return b;
}

json to_json(const MarginalModel& m)
{
  return json{{"kind", "marginal_model"},
              {"version", json_version},
              {"loc_basis", to_json(m.loc_basis)},
              {"scale_basis", to_json(m.scale_basis)},
              {"tail_basis", to_json(m.tail_basis)},
              {"loc_coeffs", to_vector(m.loc_coeffs)},
              {"scale_coeffs", to_vector(m.scale_coeffs)},
              {"penalty", m.penalty},
              {"tail",
               {{"tau_coeffs", to_vector(m.tail.tau_coeffs)},
                {"xi", m.tail.xi},
                {"threshold", m.tail.threshold},
                {"threshold_quantile", m.tail.threshold_quantile},
                {"converged", m.tail.converged},
                {"loglik", m.tail.loglik}}},
              {"residual_sample", m.residual_sample}};
}

MarginalModel margin_from_json(const json& j)
{
  expect_kind(j, "marginal_model");
  reject_unknown_keys(j,
                      {"kind", "version", "loc_basis", "scale_basis", "tail_basis", "loc_coeffs", "scale_coeffs",
                       "penalty", "tail", "residual_sample"},
                      "marginal model");
  MarginalModel m;
  try {
    m.loc_basis = basis_from_json(j.at("loc_basis"));
    m.scale_basis = basis_from_json(j.at("scale_basis"));
    m.tail_basis = basis_from_json(j.at("tail_basis"));
    m.loc_coeffs = to_eigen(j.at("loc_coeffs"));
    m.scale_coeffs = to_eigen(j.at("scale_coeffs"));
    m.penalty = j.at("penalty").get<double>();
    const json& t = j.at("tail");
    m.tail.tau_coeffs = to_eigen(t.at("tau_coeffs"));
    m.tail.xi = t.at("xi").get<double>();
    m.tail.threshold = t.at("threshold").get<double>();
    m.tail.threshold_quantile = t.at("threshold_quantile").get<double>();
    m.tail.converged = t.at("converged").get<bool>();
    m.tail.loglik = t.at("loglik").get<double>();
    m.residual_sample = j.at("residual_sample").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed marginal model: ") + e.what());
  }
  m.finalize();
  return m;
}

namespace {

json fit_to_json(const QuantileFit& f)
{
  return json{{"q", f.q},
              {"coeffs", to_vector(f.coeffs)},
              {"loss", f.achieved_loss},
              {"converged", f.converged},
              {"pivots", f.pivots}};
}

QuantileFit fit_from_json(const json& j)
{
  QuantileFit f;
  f.q = j.at("q").get<double>();
  f.coeffs = to_eigen(j.at("coeffs"));
  f.achieved_loss = j.at("loss").get<double>();
  f.converged = j.at("converged").get<bool>();
  f.pivots = j.at("pivots").get<int>();
  return f;
}

} // namespace

json to_json(const AdfGrid& g)
{
  // values and floored are rebuilt from the fits on load.
  json pairs = json::array(), q1 = json::array(), q2 = json::array();
  for (const auto& [a, b] : g.schedule.pairs)
    pairs.push_back({a, b});
  for (const auto& f : g.fits_q1)
    q1.push_back(fit_to_json(f));
  for (const auto& f : g.fits_q2)
    q2.push_back(fit_to_json(f));
  return json{{"kind", "adf_grid"},
              {"version", json_version},
              {"rays", g.grid.rays},
              {"pairs", pairs},
              {"basis", to_json(g.basis)},
              {"t", g.t},
              {"day", g.day},
              {"bounded", g.bounded},
              {"v_floor", g.v_floor},
              {"fits_q1", q1},
              {"fits_q2", q2}};
}

AdfGrid grid_from_json(const json& j)
{
  expect_kind(j, "adf_grid");
  reject_unknown_keys(j, {"kind", "version", "rays", "pairs", "basis", "t", "day", "bounded", "v_floor", "fits_q1", "fits_q2"},
                      "ADF grid");
  AdfGrid g;
  try {
    g.grid.rays = j.at("rays").get<std::vector<double>>();
    for (const auto& p : j.at("pairs"))
      g.schedule.pairs.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    g.basis = basis_from_json(j.at("basis"));
    g.t = j.at("t").get<std::vector<double>>();
    g.day = j.at("day").get<std::vector<double>>();
    g.bounded = j.at("bounded").get<bool>();
    g.v_floor = j.at("v_floor").get<double>();
    for (const auto& f : j.at("fits_q1"))
      g.fits_q1.push_back(fit_from_json(f));
    for (const auto& f : j.at("fits_q2"))
      g.fits_q2.push_back(fit_from_json(f));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed ADF grid: ") + e.what());
  }
  g.grid.validate();
  g.schedule.validate();
  if (g.fits_q1.size() != g.rays() * g.pairs() || g.fits_q2.size() != g.fits_q1.size())
    throw InvalidArgument("ADF grid threshold fits do not match rays x pairs");
  g.refresh_values();
  return g;
}

json to_json(const BernsteinModel& m)
{
  json psi = json::array();
  for (Eigen::Index i = 0; i < m.psi.rows(); ++i)
    psi.push_back(to_vector(m.psi.row(i).transpose()));
  return json{{"kind", "bernstein_model"},
              {"version", json_version},
              {"k", m.degree},
              {"link", m.link == Link::logit ? "logit" : "exponential"},
              {"basis", to_json(m.basis)},
              {"psi", psi}};
}

BernsteinModel bernstein_from_json(const json& j)
{
  expect_kind(j, "bernstein_model");
  reject_unknown_keys(j, {"kind", "version", "k", "link", "basis", "psi"}, "Bernstein model");
  BernsteinModel m;
  try {
    m.degree = j.at("k").get<int>();
    const std::string link = j.at("link").get<std::string>();
    if (link != "logit" && link != "exponential")
      throw InvalidArgument("unknown link '" + link + "'");
    m.link = link == "logit" ? Link::logit : Link::exponential;
    m.basis = basis_from_json(j.at("basis"));
    const json& psi = j.at("psi");
    m.psi.resize(static_cast<Eigen::Index>(psi.size()), static_cast<Eigen::Index>(m.basis.size()));
    for (std::size_t i = 0; i < psi.size(); ++i) {
      const auto row = psi[i].get<std::vector<double>>();
      if (row.size() != m.basis.size())
        throw InvalidArgument("psi row length does not match the basis");
      for (std::size_t c = 0; c < row.size(); ++c)
        m.psi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed Bernstein model: ") + e.what());
  }
  m.validate();
  return m;
}

json to_json(const CopulaSpec& s)
{
  json j{{"family", std::string(family_name(s.family))},
         {"n", s.n},
         {"kappa1", s.kappa1},
         {"kappa2", s.kappa2},
         {"seed", s.seed}};
  j["frozen"] = s.frozen ? json(*s.frozen) : json(nullptr);
  return j;
}

json to_json(const McmcConfig& c)
{
  return json{{"proposal_sd", c.proposal_sd},
              {"burn_in", c.burn_in},
              {"thin", c.thin},
              {"chain_seed", c.chain_seed},
              {"tune", c.tune}};
}

json to_json(const McmcDiagnostics& d)
{
  return json{{"acceptance_rate", d.acceptance_rate}, {"chain_length", d.chain_length}, {"proposal_sd", d.proposal_sd}};
}

json read_json(const fs::path& path)
{
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j)
{
  auto out = open_out(path);
  out << j.dump(1) << '\n';
  if (!out)
    throw IoError("failed writing " + path.string());
}

void expect_kind(const json& j, const std::string& kind)
{
  if (!j.is_object() || !j.contains("kind") || j["kind"] != kind)
    throw InvalidArgument("expected a JSON document of kind '" + kind + "'");
  if (!j.contains("version") || j["version"] != json_version)
    throw InvalidArgument("unsupported '" + kind + "' document version");
}

void reject_unknown_keys(const json& j, const std::vector<std::string>& allowed, const std::string& context)
{
  if (!j.is_object())
    throw InvalidArgument(context + ": expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw InvalidArgument(context + ": unknown key '" + key + "'");
}

std::string file_digest(const fs::path& path)
{
  auto in = open_in(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

Manifest::Manifest(std::string subcommand, json config)
  : subcommand_(std::move(subcommand)), config_(std::move(config))
{}

void Manifest::add(const fs::path& path)
{
  artifacts_.push_back(path);
}

void Manifest::write(const fs::path& dir) const
{
  json arts = json::array();
  for (const auto& p : artifacts_) {
    const fs::path rel = p.lexically_relative(dir);
    arts.push_back({{"path", rel.empty() ? p.generic_string() : rel.generic_string()},
                    {"bytes", fs::file_size(p)},
                    {"fnv1a64", file_digest(p)}});
  }
  write_json(dir / "manifest.json",
             json{{"kind", "manifest"},
                  {"version", json_version},
                  {"tool", "nsadf"},
                  {"tool_version", tool_version},
                  {"subcommand", subcommand_},
                  {"config", config_},
                  {"artifacts", arts}});
}

std::string ramp_color(double position)
{
  position = std::clamp(position, 0.0, 1.0);
  // #d7191c (red) to #2c7bb6 (blue)
  const int r = static_cast<int>(std::lround(215 + (44 - 215) * position));
  const int g = static_cast<int>(std::lround(25 + (123 - 25) * position));
  const int b = static_cast<int>(std::lround(28 + (182 - 28) * position));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

namespace {

std::string fmt(double v, int precision = 2)
{
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(precision) << v;
  return ss.str();
}

std::string escape(const std::string& s)
{
  std::string out;
  for (char c : s) {
    switch (c) {
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '&': out += "&amp;"; break;
    case '"': out += "&quot;"; break;
    default: out += c;
    }
  }
  return out;
}

std::string tick_label(double v)
{
  std::ostringstream ss;
  ss << std::setprecision(4) << v;
  return ss.str();
}

} // namespace

std::string emit_svg(const SvgPlot& plot)
{
  if (plot.series.empty())
    throw InvalidArgument("emit_svg: nothing to plot");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : plot.series) {
    if (s.x.empty() || s.x.size() != s.y.size())
      throw InvalidArgument("emit_svg: series '" + s.label + "' is empty or ragged");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
        continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin) || !std::isfinite(ymin))
    throw InvalidArgument("emit_svg: no finite points");
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }

  const double left = 70, right = 150, top = 40, bottom = 60;
  const double pw = plot.width - left - right, ph = plot.height - top - bottom;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(plot.width, 0) << "\" height=\""
    << fmt(plot.height, 0) << "\" viewBox=\"0 0 " << fmt(plot.width, 0) << ' ' << fmt(plot.height, 0) << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!plot.title.empty())
    o << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"15\">" << escape(plot.title) << "</text>\n";
  o << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
  o << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(left + pw) << "\" y2=\""
    << fmt(top + ph) << "\"/>\n";
  o << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(left) << "\" y2=\"" << fmt(top + ph)
    << "\"/>\n";
  o << "</g>\n";
  o << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 4.0, yv = ymin + (ymax - ymin) * k / 4.0;
    o << "<line x1=\"" << fmt(sx(xv)) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(sx(xv)) << "\" y2=\""
      << fmt(top + ph + 5) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << fmt(sx(xv)) << "\" y=\"" << fmt(top + ph + 18) << "\" text-anchor=\"middle\">"
      << tick_label(xv) << "</text>\n";
    o << "<line x1=\"" << fmt(left - 5) << "\" y1=\"" << fmt(sy(yv)) << "\" x2=\"" << fmt(left) << "\" y2=\""
      << fmt(sy(yv)) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(sy(yv) + 4) << "\" text-anchor=\"end\">"
      << tick_label(yv) << "</text>\n";
  }
  o << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(plot.height - 15)
    << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(plot.x_label) << "</text>\n";
  o << "<text x=\"18\" y=\"" << fmt(top + ph / 2) << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
    << fmt(top + ph / 2) << ")\">" << escape(plot.y_label) << "</text>\n";
  o << "</g>\n";

  const std::size_t ns = plot.series.size();
  for (std::size_t k = 0; k < ns; ++k) {
    const auto& s = plot.series[k];
    const std::string color = s.color.empty() ? ramp_color(ns == 1 ? 0.0 : static_cast<double>(k) / (ns - 1)) : s.color;
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
    if (s.dashed)
      o << " stroke-dasharray=\"5,3\"";
    o << " points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
        continue;
      o << (first ? "" : " ") << fmt(sx(s.x[i])) << ',' << fmt(sy(s.y[i]));
      first = false;
    }
    o << "\"/>\n";
    if (!s.label.empty()) {
      const double ly = top + 14.0 * static_cast<double>(k) + 6.0;
      o << "<line x1=\"" << fmt(left + pw + 12) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(left + pw + 32)
        << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      o << "<text x=\"" << fmt(left + pw + 36) << "\" y=\"" << fmt(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.label) << "</text>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

void write_text(const fs::path& path, const std::string& text)
{
  auto out = open_out(path);
  out << text;
  if (!out)
    throw IoError("failed writing " + path.string());
}

} // namespace nsadf::io
