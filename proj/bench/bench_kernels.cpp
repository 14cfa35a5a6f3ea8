/**
 * Copyright 2026 The idslab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Parallel kernels against their serial references. Thread count follows
// OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <vector>

#include "idslab/fields.hpp"
#include "idslab/pam.hpp"
#include "idslab/paths.hpp"
#include "idslab/spectrum.hpp"

using namespace idslab;

namespace {

void apply_h(benchmark::State& state, bool reference) {
  const GridSpec g{8.0, static_cast<int>(state.range(0))};
  const auto v = sample_noise(g, 4.0 * g.h() * g.h(), 1).potential();
  std::vector<double> x(g.size(), 1.0), y(g.size());
  for (auto _ : state) {
    if (reference)
      apply_hamiltonian_reference(g, v, x, y);
    else
      apply_hamiltonian(g, v, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(g.size()));
}

void trace(benchmark::State& state, bool reference) {
  const GridSpec g{4.0, static_cast<int>(state.range(0))};
  const double eps = 0.05;
  const auto noise = sample_noise(g, eps, 2);
  const double dt = max_pam_step(eps, noise.potential());
  for (auto _ : state) {
    const auto tr = reference ? heat_trace_reference(g, noise, 0.25, 32, dt, 3)
                              : heat_trace(g, noise, 0.25, 32, dt, 3);
    benchmark::DoNotOptimize(tr.estimate);
  }
}

void self(benchmark::State& state, bool reference) {
  const int n_t = static_cast<int>(state.range(0));
  const PathSpec spec{PathKind::bridge, 1.0, 2, n_t};
  std::vector<double> path(spec.stride());
  sample_path(spec, 4, 0, path);
  const std::vector<double> w(static_cast<std::size_t>(n_t + 1), 1.0 / n_t);
  const double eps = 10.0 / n_t;
  for (auto _ : state) {
    const double s = reference ? kernel::self_sum_reference(path, w, 2, eps)
                               : kernel::self_sum(path, w, 2, eps);
    benchmark::DoNotOptimize(s);
  }
}

void silt(benchmark::State& state) {
  const PathSpec spec{PathKind::bridge, 1.0, 2, 400};
  const std::vector<double> eps{0.04};
  for (auto _ : state) {
    const auto chi = silt_stream(spec, static_cast<int>(state.range(0)), 5, eps,
                                 Region::triangle(0, 1));
    benchmark::DoNotOptimize(chi.data());
  }
}

}  // namespace

BENCHMARK_CAPTURE(apply_h, parallel, false)->Arg(127)->Arg(255)->Arg(511);
BENCHMARK_CAPTURE(apply_h, serial, true)->Arg(127)->Arg(255)->Arg(511);
BENCHMARK_CAPTURE(trace, parallel, false)->Arg(35)->Arg(71)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(trace, serial, true)->Arg(35)->Arg(71)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(self, cell_list, false)->Arg(400)->Arg(1000)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(self, serial, true)->Arg(400)->Arg(1000)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK(silt)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
