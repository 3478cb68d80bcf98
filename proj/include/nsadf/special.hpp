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

namespace nsadf {

double norm_cdf(double z);
/// Upper tail 1 - Phi(z), accurate for large z.
double norm_sf(double z);
double log_norm_cdf(double z);
double norm_quantile(double p);

/// Standard-normal value mapped to a standard exponential margin,
/// -log(1 - Phi(z)), computed without cancellation.
double normal_to_exponential(double z);

} // namespace nsadf
