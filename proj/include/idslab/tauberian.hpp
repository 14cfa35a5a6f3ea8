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

/// log k(t) ~ B t^gamma as t -> inf  <=>  log rho(lambda) ~ -A |lambda|^alpha
/// as lambda -> -inf, with alpha = gamma/(gamma-1) and
/// A = (gamma-1) gamma^{gamma/(1-gamma)} B^{1/(1-gamma)}.
struct TauberianPair {
  double alpha = 0.0;
  double A = 0.0;
  double gamma = 0.0;
  double B = 0.0;
};

enum class TauberianDirection {
  from_transform,  // (gamma, B) -> (alpha, A)
  from_tail,       // (alpha, A) -> (gamma, B)
};

/// DomainError when exponent <= 1, PreconditionError when constant <= 0.
TauberianPair tauberian_convert(TauberianDirection direction, double exponent, double constant);

/// log sum_i w_i exp(-t v_i). Returns -inf for an empty or all-zero weight
/// set and +inf on overflow of the log itself; never throws on finite input.
double log_laplace_of_samples(std::span<const double> values, std::span<const double> weights,
                              double t);
/// exp of log_laplace_of_samples (may be 0 or inf).
double laplace_of_samples(std::span<const double> values, std::span<const double> weights,
                          double t);
/// Unit weights.
double laplace_of_samples(std::span<const double> values, double t);

/// Regression of log|y| on |s|^exponent over the user-given window
/// [lo, hi] of s. constant is the slope (B for transforms, -A for tails);
/// a quadratic refit gives the curvature diagnostic, which fires when the
/// curvature is both significant (> 3 SE) and above rounding.
struct AsymptoticFit {
  double hypothesis = 0.0;  // exponent
  double constant = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
  double curvature = 0.0;
  double curvature_error = 0.0;
  bool curved = false;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t points = 0;
};

/// Needs >= 4 points with s in [lo, hi] and nonzero y; y_error (optional,
/// standard errors of y) switches to weighted least squares.
AsymptoticFit fit_log_asymptotics(std::span<const double> s, std::span<const double> y,
                                  double exponent, double lo, double hi,
                                  std::span<const double> y_error = {});
/// Same fit from log|y| and its standard errors; avoids overflow for
/// transforms that grow like exp(B t^gamma).
AsymptoticFit fit_log_asymptotics_log(std::span<const double> s, std::span<const double> log_y,
                                      double exponent, double lo, double hi,
                                      std::span<const double> log_error = {});

/// {"hypothesis", "constant", "stderr", "curvature", "window": [lo, hi]}.
std::string to_json(const AsymptoticFit& fit);

/// The Riesz chain: the intersection rate at rho, scaled by (nu/2)^{2/(2-sigma)}
/// and t^{2-sigma/2}, gives log k(t) ~ B t^gamma with gamma = (4-sigma)/(2-sigma);
/// the Tauberian map then yields (alpha, A), to be compared with
/// ((4-sigma)/2, 1/(2 nu rho)).
struct RieszChain {
  double sigma = 0.0;
  double nu = 0.0;
  double rho = 0.0;
  double gamma = 0.0;
  double B = 0.0;
  TauberianPair pair;
  double expected_alpha = 0.0;
  double expected_A = 0.0;
  double residual = 0.0;  // max relative error of alpha and A
};

RieszChain riesz_consistency(double sigma, double nu, double rho);

/// Monte Carlo log k(t) = -log(2 pi t) + log E exp(nu/2 t^{2-sigma/2} F),
/// F = int_0^1 int_0^1 |X_s - X_r|^{-sigma} over m unit planar bridges.
struct RieszTransform {
  double sigma = 0.0;
  double nu = 0.0;
  int m = 0;
  int n_t = 0;
  std::vector<double> t;
  std::vector<double> log_k;
  std::vector<double> std_error;  // delta-method SE of log_k
  std::vector<double> functional;  // F per bridge
};

RieszTransform riesz_bridge_transform(double sigma, double nu, std::span<const double> t, int m,
                                      int n_t, std::uint64_t seed);

}  // namespace idslab
