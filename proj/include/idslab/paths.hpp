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

namespace idslab {

enum class PathKind { motion, bridge };

std::string to_string(PathKind kind);
PathKind parse_path_kind(const std::string& s);

/// Shape of a sampled path: horizon t split into n_t uniform steps in d dimensions.
struct PathSpec {
  PathKind kind = PathKind::bridge;
  double t = 1.0;
  int d = 2;
  int n_t = 100;

  [[nodiscard]] double dt() const { return t / n_t; }
  [[nodiscard]] std::size_t stride() const {
    return static_cast<std::size_t>(n_t + 1) * static_cast<std::size_t>(d);
  }
  void validate() const;
};

/// Path `index` of the ensemble keyed by `seed`, written to out[(i*d)+a] for
/// time index i = 0..n_t. Each path draws from its own Philox stream, so any
/// subset of an ensemble can be regenerated without the others.
void sample_path(const PathSpec& spec, std::uint64_t seed, std::uint64_t index,
                 std::span<double> out);

struct PathEnsemble {
  PathSpec spec;
  int m = 0;
  std::uint64_t seed = 0;
  std::vector<double> points;  // m x (n_t+1) x d

  [[nodiscard]] std::span<const double> path(int k) const {
    return {points.data() + static_cast<std::size_t>(k) * spec.stride(), spec.stride()};
  }
};

PathEnsemble sample_paths(PathKind kind, double t, int d, int n_t, int m, std::uint64_t seed);

/// [a,b]^2 restricted to r <= s (triangle) or [a,b] x [c,d] (rectangle).
struct Region {
  enum class Shape { triangle, rectangle };
  Shape shape = Shape::triangle;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  static Region triangle(double a, double b);
  static Region rectangle(double a, double b, double c, double d);
  void validate(double t) const;
};

std::string to_string(const Region& region);

struct SiltSample {
  double chi = 0.0;
  Region region;
  double eps = 0.0;
  double renorm = 0.0;
  double zeta = 0.0;
};

/// Guard dt <= eps/10. Throws PreconditionError naming the smallest n_t that
/// satisfies it.
void check_silt_resolution(const PathSpec& spec, double eps);

/// Smallest n_t with t/n_t <= eps/10.
int required_steps(double t, double eps);

/// Mollified SILT of every path of the ensemble over `region`, using the
/// product trapezoid rule on the time grid (the diagonal enters with its
/// trapezoid weight). Region endpoints must lie on the time grid.
std::vector<SiltSample> silt_mollified(const PathEnsemble& paths, double eps,
                                       const Region& region);

/// Mutual intersection of path k of `first` over [0, A] with path k of
/// `second` over [0, B]: int_0^A int_0^B p_eps(B_s - B~_r) ds dr.
std::vector<SiltSample> silt_mutual(const PathEnsemble& first, double A,
                                    const PathEnsemble& second, double B, double eps);

/// Single-path value of chi over a region (no renormalization).
double silt_value(std::span<const double> path, const PathSpec& spec, double eps,
                  const Region& region);

/// Streams m paths from (spec, seed) and returns chi for each, evaluating
/// every listed eps on the same path (common random numbers). Result is
/// indexed [eps][path]. Parallel over paths; bit-identical for any thread count.
std::vector<std::vector<double>> silt_stream(const PathSpec& spec, int m, std::uint64_t seed,
                                             std::span<const double> eps_list,
                                             const Region& region);

namespace kernel {

/// sum_{i<j} w_i w_j exp(-|x_i - x_j|^2 / (2 eps)) for a d-dimensional point set,
/// naive double loop. Serial reference.
double self_sum_reference(std::span<const double> pts, std::span<const double> w, int d,
                          double eps);
/// Same sum with a cell list (d = 2) that drops pairs whose Gaussian factor is
/// below exp(-kCutoff). Falls back to the reference for d != 2.
double self_sum(std::span<const double> pts, std::span<const double> w, int d, double eps);

/// sum_{i,j} wa_i wb_j exp(-|a_i - b_j|^2 / (2 eps)).
double cross_sum_reference(std::span<const double> a, std::span<const double> wa,
                           std::span<const double> b, std::span<const double> wb, int d,
                           double eps);
double cross_sum(std::span<const double> a, std::span<const double> wa,
                 std::span<const double> b, std::span<const double> wb, int d, double eps);

inline constexpr double kCutoff = 36.0;

}  // namespace kernel

/// E[chi_eps(region)] for motion or bridge paths of horizon t, in closed form.
double expected_silt(PathKind kind, double t, double eps, const Region& region);

/// E[int_0^A int_0^B p_eps(B_s - B~_r) ds dr] for independent motions.
double expected_mutual(double eps, double A, double B);

/// Radon-Nikodym factor of the bridge from 0 to x at time t against Brownian
/// motion on [0, u]; `b_u` is the motion's position at time u.
double girsanov_weight(std::span<const double> b_u, double t, double u,
                       std::span<const double> x);

struct ExpMoment {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double log_estimate = 0.0;
  bool heavy_tail = false;
  bool overflow = false;
  std::string diagnostic;
};

/// Sample mean of exp(t * zeta) with a percentile bootstrap interval.
ExpMoment exp_moment(std::span<const double> zeta, double t, int resamples = 400,
                     std::uint64_t seed = 0x5eed, double level = 0.95);

struct RateFit {
  double rate = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
  std::vector<double> thresholds;
  std::vector<double> tail_prob;
  std::vector<std::size_t> exceedances;
};

/// Weighted least-squares slope of log P(zeta >= u) against u.
RateFit tail_rate(std::span<const double> zeta, std::span<const double> thresholds,
                  std::size_t min_exceedances = 50);

/// int_0^t int_0^t |X_s - X_r|^{-sigma} ds dr (0 < sigma < min(2, d)): node sum
/// over i != j plus the zeta-regularized diagonal term
/// -2 zeta(sigma/2) E|Z|^{-sigma} t dt^{1 - sigma/2}, which restores the mass
/// the punctured lattice sum misses near s = r.
double riesz_intersection(std::span<const double> path, const PathSpec& spec, double sigma);

}  // namespace idslab
