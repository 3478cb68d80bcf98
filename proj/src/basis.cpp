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

#include "nsadf/basis.hpp"

#include "nsadf/error.hpp"

#include <cmath>
#include <numbers>

namespace nsadf {

void BasisSpec::validate() const
{
  if (time_degree < 0 || harmonics < 0)
    throw InvalidArgument("basis: negative degree or harmonic count");
  if (!(time_scale > 0.0) || !std::isfinite(time_scale))
    throw InvalidArgument("basis: time_scale must be positive");
  if (harmonics > 0 && !(period > 0.0))
    throw InvalidArgument("basis: period must be positive");
  if (size() == 0)
    throw InvalidArgument("basis: no columns");
}

void BasisSpec::row(double t, double day, std::span<double> out) const
{
  if (out.size() != size())
    throw InvalidArgument("basis: output row has the wrong length");
  std::size_t c = 0;
  if (intercept)
    out[c++] = 1.0;
  const double s = t / time_scale;
  double power = 1.0;
  for (int k = 1; k <= time_degree; ++k) {
    power *= s;
    out[c++] = power;
  }
  for (int k = 1; k <= harmonics; ++k) {
    const double arg = 2.0 * std::numbers::pi * k * day / period;
    out[c++] = std::sin(arg);
    out[c++] = std::cos(arg);
  }
}

Eigen::VectorXd BasisSpec::row(double t, double day) const
{
  Eigen::VectorXd z(static_cast<Eigen::Index>(size()));
  row(t, day, std::span<double>(z.data(), size()));
  return z;
}

Eigen::MatrixXd BasisSpec::design(std::span<const double> t, std::span<const double> day) const
{
  validate();
  if (harmonics > 0 && day.size() != t.size())
    throw InvalidArgument("basis: harmonic terms need a day index for every row");
  const std::size_t p = size();
  Eigen::MatrixXd z(static_cast<Eigen::Index>(t.size()), static_cast<Eigen::Index>(p));
  std::vector<double> buf(p);
  for (std::size_t i = 0; i < t.size(); ++i) {
    row(t[i], day.empty() ? 0.0 : day[i], buf);
    for (std::size_t j = 0; j < p; ++j)
      z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = buf[j];
  }
  return z;
}

std::vector<std::string> BasisSpec::column_names() const
{
  std::vector<std::string> names;
  if (intercept)
    names.emplace_back("1");
  for (int k = 1; k <= time_degree; ++k)
    names.push_back(k == 1 ? std::string("t") : "t^" + std::to_string(k));
  for (int k = 1; k <= harmonics; ++k) {
    names.push_back("sin" + std::to_string(k));
    names.push_back("cos" + std::to_string(k));
  }
  return names;
}

} // namespace nsadf
