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

#include "nsadf/special.hpp"

#include "nsadf/error.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <numbers>

namespace nsadf {

double norm_cdf(double z)
{
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double norm_sf(double z)
{
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

double log_norm_cdf(double z)
{
  if (z > -30.0)
    return std::log(norm_cdf(z));
  // Asymptotic Mills-ratio expansion; erfc underflows beyond this point.
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double norm_quantile(double p)
{
  if (!(p > 0.0 && p < 1.0))
    throw InvalidArgument("norm_quantile: probability must lie in (0,1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double normal_to_exponential(double z)
{
  return -log_norm_cdf(-z);
}

} // namespace nsadf
