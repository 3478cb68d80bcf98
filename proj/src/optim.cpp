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

#include "nsadf/optim.hpp"

#include "nsadf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nsadf {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0,
                             const std::vector<double>& step,
                             const NelderMeadOptions& options)
{
  const std::size_t d = x0.size();
  if (d == 0 || step.size() != d)
    throw InvalidArgument("nelder_mead: dimension mismatch");

  // Adaptive coefficients help in higher dimensions.
  const double dd = static_cast<double>(d);
  const double alpha = 1.0;
  const double gamma = 1.0 + 2.0 / dd;
  const double rho = 0.75 - 1.0 / (2.0 * dd);
  const double sigma = 1.0 - 1.0 / dd;

  NelderMeadResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evals;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> pts(d + 1, x0);
  std::vector<double> fv(d + 1);
  fv[0] = eval(x0);
  for (std::size_t i = 0; i < d; ++i) {
    pts[i + 1][i] += step[i];
    fv[i + 1] = eval(pts[i + 1]);
  }

  std::vector<std::size_t> order(d + 1);
  std::vector<double> centroid(d), xr(d), xe(d), xc(d);
  while (res.evals < options.max_evals) {
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[d - 1];

    double xspread = 0.0;
    for (std::size_t i = 0; i <= d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        xspread = std::max(xspread, std::abs(pts[i][j] - pts[best][j]));
    if (std::isfinite(fv[best]) && fv[worst] - fv[best] <= options.f_tol && xspread <= options.x_tol) {
      res.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= d; ++i)
      if (i != worst)
        for (std::size_t j = 0; j < d; ++j)
          centroid[j] += pts[i][j] / dd;

    for (std::size_t j = 0; j < d; ++j)
      xr[j] = centroid[j] + alpha * (centroid[j] - pts[worst][j]);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      for (std::size_t j = 0; j < d; ++j)
        xe[j] = centroid[j] + gamma * (xr[j] - centroid[j]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        fv[worst] = fe;
      } else {
        pts[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      pts[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    for (std::size_t j = 0; j < d; ++j)
      xc[j] = outside ? centroid[j] + rho * (xr[j] - centroid[j]) : centroid[j] - rho * (centroid[j] - pts[worst][j]);
    const double fc = eval(xc);
    if (fc < std::min(fr, fv[worst])) {
      pts[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == best)
        continue;
      for (std::size_t j = 0; j < d; ++j)
        pts[i][j] = pts[best][j] + sigma * (pts[i][j] - pts[best][j]);
      fv[i] = eval(pts[i]);
    }
  }

  const auto it = std::min_element(fv.begin(), fv.end());
  res.x = pts[static_cast<std::size_t>(it - fv.begin())];
  res.f = *it;
  return res;
}

} // namespace nsadf
