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

#include <stdexcept>
#include <string>

namespace nsadf {

/// Bad input or configuration. The CLI maps this to exit code 2.
class InvalidArgument : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical stage failed (singular design, degenerate sample, sampler
/// diagnostics out of range). Carries the name of the failing stage.
class NumericalError : public std::runtime_error
{
public:
  NumericalError(std::string stage, const std::string& what)
    : std::runtime_error(stage + ": " + what)
    , stage_(std::move(stage))
  {}

  const std::string& stage() const { return stage_; }

private:
  std::string stage_;
};

class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

} // namespace nsadf
