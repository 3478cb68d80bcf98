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


// Serial reference (workers = 1) against the OpenMP kernels (workers = 0,
// all cores) on the three data-parallel hot spots.

#include "nsadf/adf.hpp"
#include "nsadf/copula.hpp"
#include "nsadf/evaluation.hpp"
#include "nsadf/return_curve.hpp"

#include <benchmark/benchmark.h>

using namespace nsadf;

namespace {

const ExpSeries& data()
{
  static const ExpSeries s = [] {
    CopulaSpec spec;
    spec.family = Family::inv_logistic;
    spec.n = 10000;
    return sample(spec);
  }();
  return s;
}

const AdfGrid& grid()
{
  static const AdfGrid g = lambda_qr_average(data(), RayGrid::uniform(), QuantileSchedule::linear());
  return g;
}

void BM_lambda_qr_average(benchmark::State& state)
{
  data();
  AdfOptions o;
  o.workers = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(lambda_qr_average(data(), RayGrid::uniform(21), QuantileSchedule::linear(10), o));
}

void BM_bernstein_objective(benchmark::State& state)
{
  grid();
  BernsteinModel m;
  m.basis = BasisSpec::polynomial(1, 10000.0);
  m.psi = Eigen::MatrixXd::Constant(6, 2, -0.3);
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(bernstein_objective(grid(), m, workers));
}

void BM_curve_check(benchmark::State& state)
{
  static const ExpSeries big = sample_frozen(Family::inv_logistic, 0.5, 1000000, 3);
  const ReturnCurve curve = exp_curve_averaged(grid(), lambda_star(grid(), 5000), 1e-3, 5000.0);
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(curve_check(curve, big, workers));
}

} // namespace

BENCHMARK(BM_lambda_qr_average)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_bernstein_objective)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_curve_check)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
