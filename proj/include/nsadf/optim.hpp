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

#include <functional>
#include <vector>

namespace nsadf {

struct NelderMeadOptions
{
  int max_evals = 50000;
  /// Converged once both the objective spread and the coordinate spread
  /// across the simplex fall below these.
  double f_tol = 1e-10;
  double x_tol = 1e-8;
};

struct NelderMeadResult
{
  std::vector<double> x;
  double f = 0.0;
  int evals = 0;
  bool converged = false;
};

/// Minimises f starting from a simplex built by offsetting x0 by step along
/// each axis. Non-finite objective values are treated as +inf.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0,
                             const std::vector<double>& step,
                             const NelderMeadOptions& options = {});

} // namespace nsadf
