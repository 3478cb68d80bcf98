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

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace nsadf {

/// Covariate basis over the time index t and the within-year day index d:
///   [1] , (t/s), (t/s)^2, ... , sin(2 pi k d / P), cos(2 pi k d / P) ...
/// with s = time_scale and P = period.
struct BasisSpec
{
  bool intercept = true;
  int time_degree = 0;
  double time_scale = 1.0;
  int harmonics = 0;
  double period = 90.0;

  static BasisSpec constant() { return {}; }
  static BasisSpec polynomial(int degree, double time_scale)
  {
    BasisSpec b;
    b.time_degree = degree;
    b.time_scale = time_scale;
    return b;
  }

  std::size_t size() const
  {
    return (intercept ? 1u : 0u) + static_cast<std::size_t>(time_degree) +
           2u * static_cast<std::size_t>(harmonics);
  }

  bool intercept_only() const { return intercept && time_degree == 0 && harmonics == 0; }

  void validate() const;

  void row(double t, double day, std::span<double> out) const;
  Eigen::VectorXd row(double t, double day = 0.0) const;

  /// One row per observation. day may be empty when harmonics == 0.
  Eigen::MatrixXd design(std::span<const double> t, std::span<const double> day = {}) const;

  std::vector<std::string> column_names() const;

  bool operator==(const BasisSpec&) const = default;
};

} // namespace nsadf
