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
#include "nsadf/copula.hpp"
#include "nsadf/evaluation.hpp"
#include "nsadf/margins.hpp"
#include "nsadf/return_curve.hpp"
#include "nsadf/series.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace nsadf::io {

using json = nlohmann::ordered_json;

inline constexpr int csv_version = 1;
inline constexpr int json_version = 1;
inline constexpr const char* tool_version = "0.1.0";

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

// Series CSV: a "# nsadf series v1" line, then a header t,day,x,y (or t,x,y
// without a day column). Files lacking the version line are read as v1;
// any other version is rejected with InvalidArgument.
void write_series_csv(const std::filesystem::path& path,
                      const std::vector<double>& t,
                      const std::vector<double>& day,
                      const std::vector<double>& x,
                      const std::vector<double>& y);
void write_series_csv(const std::filesystem::path& path, const ExpSeries& s);
void write_series_csv(const std::filesystem::path& path, const RawSeries& s);
RawSeries read_series_csv(const std::filesystem::path& path);
ExpSeries read_exp_series_csv(const std::filesystem::path& path);

/// Curve CSV: version line, metadata comment, then w,x,y,clamped.
void write_curve_csv(const std::filesystem::path& path, const ReturnCurve& curve);
ReturnCurve read_curve_csv(const std::filesystem::path& path);

/// Generic versioned table: header columns and rows of numbers.
void write_table_csv(const std::filesystem::path& path,
                     const std::string& kind,
                     const std::vector<std::string>& columns,
                     const std::vector<std::vector<std::string>>& rows);

json to_json(const BasisSpec& b);
BasisSpec basis_from_json(const json& j);

json to_json(const MarginalModel& m);
MarginalModel margin_from_json(const json& j);

json to_json(const AdfGrid& g);
AdfGrid grid_from_json(const json& j);

json to_json(const BernsteinModel& m);
BernsteinModel bernstein_from_json(const json& j);

json to_json(const CopulaSpec& s);
json to_json(const McmcConfig& c);
json to_json(const McmcDiagnostics& d);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);
/// Throws InvalidArgument unless j["kind"] == kind and j["version"] == json_version.
void expect_kind(const json& j, const std::string& kind);
/// Throws InvalidArgument naming the first key of j not in allowed.
void reject_unknown_keys(const json& j, const std::vector<std::string>& allowed, const std::string& context);

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

/// Records every written artifact; write() emits manifest.json listing the
/// config echo and a digest per artifact.
class Manifest
{
public:
  Manifest(std::string subcommand, json config);
  void add(const std::filesystem::path& path);
  void write(const std::filesystem::path& dir) const;

private:
  std::string subcommand_;
  json config_;
  std::vector<std::filesystem::path> artifacts_;
};

struct SvgSeries
{
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
  /// Empty picks the ramp colour for the series' position.
  std::string color;
  bool dashed = false;
};

struct SvgPlot
{
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<SvgSeries> series;
  double width = 640.0;
  double height = 480.0;
};

/// Red-to-blue ramp; position in [0,1].
std::string ramp_color(double position);

/// Self-contained SVG with labelled axes and one polyline per series.
/// Throws InvalidArgument when there are no series or a series is empty.
std::string emit_svg(const SvgPlot& plot);
void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace nsadf::io
