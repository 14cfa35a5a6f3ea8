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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "idslab/common.hpp"

namespace idslab {

/// One sampled mollified white-noise field on the interior nodes of a grid.
/// `values` holds xi_eps at the nodes; the Anderson potential is
/// values - c_eps.
struct NoiseRealization {
  GridSpec grid;
  double eps = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> values;
  double c_eps = 0.0;

  [[nodiscard]] std::vector<double> potential() const;
};

/// c_eps = (1/2pi) log(1/eps).
double renorm_constant(double eps);

/// Rejects eps below the mollifier resolution limit 4 h^2.
void check_mollifier_resolution(const GridSpec& grid, double eps);

/// Independent N(0, 1/h^2) entries, one per interior node, so that
/// sum_i xi_i phi(x_i) h^2 has variance ~ ||phi||_2^2.
std::vector<double> sample_white_noise(const GridSpec& grid, std::uint64_t seed);

/// Heat semigroup at time eps/2 (kernel p_{eps/2}) applied to a raw field in the
/// reflecting cosine eigenbasis of the node lattice. Each cosine mode is damped
/// by its continuum factor exp(-(eps/4)|k|^2), which reproduces p_{eps/2} at
/// interior nodes and leaves constants and the grid sum unchanged.
NoiseRealization mollify(std::span<const double> raw, const GridSpec& grid, double eps,
                         std::uint64_t seed = 0);

/// sample_white_noise followed by mollify.
NoiseRealization sample_noise(const GridSpec& grid, double eps, std::uint64_t seed);

/// Noise realization whose potential values - c_eps equals `potential`
/// (used for deterministic potentials in tests and oracles).
NoiseRealization noise_from_potential(const GridSpec& grid, std::span<const double> potential,
                                      double eps = 1.0);

/// Stationary Gaussian field with covariance nu |x-y|^{-sigma} at lags >= reg.
struct RieszFieldSpec {
  int d = 2;
  double sigma = 1.0;
  double nu = 1.0;
  double reg = 0.1;

  void validate() const;
};

/// Target covariance nu r^{-sigma}, continued inside reg by the C^1 quadratic
/// cap nu reg^{-sigma} (1 + sigma/2 (1 - r^2/reg^2)). Reference for tests; the
/// sampler itself works in Fourier space.
double riesz_covariance(const RieszFieldSpec& spec, double r);

/// Fourier synthesis on a periodic box of 4n nodes per side. Mode k gets the
/// integral over its cell of the spectral density
/// (2pi)^d nu C_{d,sigma} |k|^{sigma-d} exp(-|k|^2 reg^2 / 8), so the
/// integrable singularity at k = 0 is kept exactly. Weights are computed once;
/// each sample costs one d-dimensional FFT and yields two independent fields.
class RieszFieldSampler {
 public:
  RieszFieldSampler(const RieszFieldSpec& spec, int n, double h);

  /// Two independent realizations on the n^d node lattice (row-major).
  [[nodiscard]] std::pair<std::vector<double>, std::vector<double>> sample_pair(
      std::uint64_t seed) const;
  [[nodiscard]] std::vector<double> sample(std::uint64_t seed) const;

  [[nodiscard]] int embedding_size() const { return embed_; }
  /// Exact covariance of the synthesized field at lags j h e_1, j = 0..n-1.
  [[nodiscard]] std::vector<double> axis_covariance() const;

 private:
  RieszFieldSpec spec_;
  int n_;
  double h_;
  int embed_ = 0;
  std::vector<double> sqrt_eigen_;
};

/// One Riesz field on the grid lattice (n^d nodes with spacing grid.h()).
std::vector<double> sample_riesz_field(const RieszFieldSpec& spec, const GridSpec& grid,
                                       std::uint64_t seed);

/// Flat binary dump (row-major little-endian float64) plus a JSON sidecar.
/// Writes `<stem>.bin` and `<stem>.json`.
void write_field(const std::filesystem::path& stem, std::span<const double> values,
                 const GridSpec& grid, double eps, std::uint64_t seed,
                 const std::string& kind);

std::vector<double> read_field(const std::filesystem::path& bin_path);

}  // namespace idslab
