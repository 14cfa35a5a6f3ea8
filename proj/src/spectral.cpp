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

#include "spectral.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "idslab/common.hpp"

namespace idslab::spectral {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_r2r_kind fftw_kind(R2R kind) {
  switch (kind) {
    case R2R::dct2: return FFTW_REDFT10;
    case R2R::dct3: return FFTW_REDFT01;
    case R2R::dst1: return FFTW_RODFT00;
  }
  return FFTW_REDFT10;
}

fftw_plan r2r_plan(int n, R2R kind) {
  static std::map<std::pair<int, int>, fftw_plan> cache;
  const std::lock_guard lock(planner_mutex());
  const auto key = std::make_pair(n, static_cast<int>(kind));
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  std::vector<double> scratch(static_cast<std::size_t>(n) * n);
  const auto k = fftw_kind(kind);
  fftw_plan plan = fftw_plan_r2r_2d(n, n, scratch.data(), scratch.data(), k, k,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plan == nullptr) throw PreconditionError("FFTW failed to create an r2r plan");
  cache.emplace(key, plan);
  return plan;
}

fftw_plan dft_plan(std::span<const int> dims, int sign) {
  static std::map<std::tuple<std::vector<int>, int>, fftw_plan> cache;
  const std::lock_guard lock(planner_mutex());
  auto key = std::make_tuple(std::vector<int>(dims.begin(), dims.end()), sign);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  std::size_t total = 1;
  for (int d : dims) total *= static_cast<std::size_t>(d);
  std::vector<std::complex<double>> scratch(total);
  auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
  fftw_plan plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), p, p, sign,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plan == nullptr) throw PreconditionError("FFTW failed to create a dft plan");
  cache.emplace(std::move(key), plan);
  return plan;
}

}  // namespace

void r2r_2d(std::span<double> data, int n, R2R kind) {
  if (data.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
    throw PreconditionError("r2r_2d: buffer size does not match n x n");
  }
  fftw_execute_r2r(r2r_plan(n, kind), data.data(), data.data());
}

void dft(std::span<std::complex<double>> data, std::span<const int> dims, int sign) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(dft_plan(dims, sign), p, p);
}

}  // namespace idslab::spectral
