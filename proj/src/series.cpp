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

#include "nsadf/series.hpp"

#include "nsadf/error.hpp"

#include <cmath>

namespace nsadf {

void ExpSeries::validate(bool require_nonnegative) const
{
  const std::size_t n = x.size();
  if (n == 0)
    throw InvalidArgument("series is empty");
  if (y.size() != n || t.size() != n || (!day.empty() && day.size() != n))
    throw InvalidArgument("series columns have different lengths");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]) || !std::isfinite(t[i]))
      throw InvalidArgument("series contains non-finite values");
    if (require_nonnegative && (x[i] < 0.0 || y[i] < 0.0))
      throw InvalidArgument("exponential-scale series contains negative values");
    if (i > 0 && !(t[i] > t[i - 1]))
      throw InvalidArgument("series time index is not strictly increasing");
  }
}

std::vector<double> time_index(std::size_t n)
{
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i)
    t[i] = static_cast<double>(i + 1);
  return t;
}

} // namespace nsadf
