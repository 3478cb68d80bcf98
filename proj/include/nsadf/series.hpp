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

#include <cstddef>
#include <vector>

namespace nsadf {

/// Paired bivariate series with a time covariate. On standard exponential
/// margins this is the input to dependence estimation; the same layout holds
/// raw observations before marginal pre-processing.
struct ExpSeries
{
  std::vector<double> t;
  std::vector<double> day; // empty when the series carries no day index
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const { return x.size(); }
  bool has_day() const { return !day.empty(); }
  double day_at(std::size_t i) const { return day.empty() ? 0.0 : day[i]; }

  /// Throws InvalidArgument on length mismatch or non-increasing time.
  void validate(bool require_nonnegative) const;
};

/// Time indices 1..n.
std::vector<double> time_index(std::size_t n);

} // namespace nsadf
