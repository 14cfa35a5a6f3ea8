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
#include <span>
#include <string>
#include <vector>

#include "idslab/common.hpp"
#include "idslab/fields.hpp"
#include "idslab/paths.hpp"

namespace idslab {

enum class InitialKind { delta, ones, custom };

std::string to_string(InitialKind kind);

struct InitialDatum {
  InitialKind kind = InitialKind::ones;
  int i0 = 0;  // node of the delta
  int j0 = 0;
  std::vector<double> values;  // custom data, row-major

  static InitialDatum delta(int i, int j);
  static InitialDatum ones();
  static InitialDatum custom(std::vector<double> values);

  /// Values on the grid; the delta is 1/h^2 at its node.
  [[nodiscard]] std::vector<double> materialize(const GridSpec& grid) const;
  [[nodiscard]] bool nonnegative() const;
};

struct PamState {
  GridSpec grid;
  double t = 0.0;
  std::vector<double> u;
  InitialKind initial = InitialKind::ones;
  int steps = 0;
  double dt = 0.0;
  std::string warning;  // dt guard violation, with a bias estimate
};

/// One Strang step e^{V dt/2} e^{dt Delta_h/2} e^{V dt/2} of
/// du/dt = 1/2 Delta_h u + V u with Dirichlet boundary. The heat factor is
/// applied exactly in the discrete sine basis, so the scheme is
/// unconditionally stable and its only error is the splitting commutator.
class PamPropagator {
 public:
  PamPropagator(const GridSpec& grid, std::span<const double> potential, double dt);

  /// Advances u by `steps` steps in place. With `clamp`, round-off negatives
  /// after the heat substep are set to zero (for nonnegative data).
  /// Const and reentrant: safe to call concurrently on different arrays.
  void advance(std::span<double> u, int steps, bool clamp) const;

  [[nodiscard]] double dt() const { return dt_; }
  [[nodiscard]] const GridSpec& grid() const { return grid_; }

 private:
  GridSpec grid_;
  double dt_;
  std::vector<double> half_;  // exp(V dt / 2)
  std::vector<double> full_;  // exp(V dt)
  std::vector<double> heat_;  // exp(-dt mu_jk) / (2(n+1))^2
};

/// Largest step allowed by the guard dt <= min(eps, 1/max|V|)/10.
double max_pam_step(double eps, std::span<const double> potential);

/// u(t) from the initial datum. The step is t / ceil(t / dt).
PamState evolve(const GridSpec& grid, const NoiseRealization& noise, const InitialDatum& initial,
                double t, double dt);

struct TraceEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  double lo = 0.0;  // estimate -/+ 3 std_error
  double hi = 0.0;
  int probes = 0;
};

/// Hutchinson estimate of tr e^{-tH} = sum_n exp(-t lambda_n) with
/// Rademacher probes (probe k from Philox stream k). Parallel over probes.
TraceEstimate heat_trace(const GridSpec& grid, const NoiseRealization& noise, double t,
                         int probes, double dt, std::uint64_t seed = 0x7ace);
/// Serial reference of heat_trace (same probes, same result).
TraceEstimate heat_trace_reference(const GridSpec& grid, const NoiseRealization& noise, double t,
                                   int probes, double dt, std::uint64_t seed = 0x7ace);

struct MassDuality {
  double delta_mass = 0.0;  // sum_y u^{delta_x0}(t, y) h^2
  double ones_value = 0.0;  // u^{1}(t, x0)
  double residual = 0.0;    // relative
};

MassDuality mass_duality_check(const GridSpec& grid, const NoiseRealization& noise, int i0,
                               int j0, double t, double dt);

/// Bilinear interpolation of node values at (x, y); points between the
/// outermost nodes and the boundary take the nearest node row/column.
double interpolate(const GridSpec& grid, std::span<const double> values, double x, double y);

struct FeynmanKac {
  double estimate = 0.0;
  double std_error = 0.0;
  double lo = 0.0;  // estimate -/+ 3 std_error
  double hi = 0.0;
  double survival = 0.0;  // mean box-survival weight
  int m = 0;
  std::string warning;
};

/// (1/2 pi t) E[exp(int_0^t (xi_eps - c_eps)(x0 + X_s) ds) 1{x0 + X stays in Q_L}]
/// over Brownian bridges X from 0 to 0, estimating u^{delta_x0}(t, x0). The
/// exit indicator is replaced by its conditional expectation given the
/// nodes (product over steps and walls of 1 - exp(-2 d_i d_{i+1} / dt)).
/// n_t = 0 picks the smallest n_t with dt <= eps/10.
FeynmanKac feynman_kac_estimate(const NoiseRealization& noise, double t, double x0, double y0,
                                int m, std::uint64_t seed, int n_t = 0);

struct AnnealedMoment {
  double t = 0.0;
  double eps = 0.0;
  int m = 0;
  int n_t = 0;  // steps of the unit-horizon bridges
  /// (1/2 pi t) mean exp(chi^t_eps - c_eps t), with chi^t_eps = t chi^1_{eps/t}.
  double form1 = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double log_form1 = 0.0;
  /// (t^{t/2pi - 1} / 2pi) exp_moment(zeta, t), zeta = chi^1_{eps/t} - E chi^1_{eps/t}.
  double form2 = 0.0;
  double log_form2 = 0.0;
  /// log(form1 / form2) = t (E chi^1_{eps/t} - (1/2pi) log(t/eps)), the
  /// finite-eps gap between the two normalizations.
  double log_gap = 0.0;
  bool heavy_tail = false;
  bool overflow = false;
  std::string diagnostic;
};

/// Annealed moment E[u(t, 0)] for each eps, all from the same m bridges
/// (common random numbers). Bridges have unit horizon and n_t steps fixed by
/// the smallest eps/t; parallel over paths.
std::vector<AnnealedMoment> annealed_moment(double t, std::span<const double> eps_list, int m,
                                            std::uint64_t seed, int resamples = 400);

AnnealedMoment annealed_moment(double t, double eps, int m, std::uint64_t seed);

}  // namespace idslab
