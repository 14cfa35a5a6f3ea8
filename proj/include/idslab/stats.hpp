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
#include <vector>

namespace idslab::stats {

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n-1)
  double std_error = 0.0;  // stddev / sqrt(n)
  std::size_t count = 0;
};

/// Mean, sample standard deviation and standard error, accumulated in index
/// order (deterministic).
MeanStd mean_std(std::span<const double> x);

/// Empirical covariance of paired samples (n-1 normalization).
double covariance(std::span<const double> x, std::span<const double> y);

/// Two-sided percentile bootstrap interval for the mean of `x`.
/// Resamples are drawn from a Philox stream keyed by `seed`.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
Interval bootstrap_mean_interval(std::span<const double> x, int resamples,
                                 double level, std::uint64_t seed);

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Kolmogorov distribution survival function Q(lambda) = P(K > lambda).
double kolmogorov_survival(double lambda);

/// Weighted least squares y ~ sum_k beta_k x^k with known per-point
/// variances (weights = 1/variance). Returns coefficients, their standard
/// errors from (X^T W X)^{-1}, and the weighted residual chi^2.
struct PolyFit {
  std::vector<double> coef;
  std::vector<double> std_error;
  double chi2 = 0.0;
  std::size_t points = 0;
};
PolyFit weighted_polyfit(std::span<const double> x, std::span<const double> y,
                         std::span<const double> variance, int degree);

/// Ordinary least squares with residual-based standard errors.
PolyFit ols_polyfit(std::span<const double> x, std::span<const double> y, int degree);

/// log(sum_i w_i exp(a_i)) for w_i >= 0, without overflow.
double log_sum_exp(std::span<const double> a, std::span<const double> w);

/// Quantile by linear interpolation of order statistics (type 7).
double quantile(std::vector<double> x, double q);

}  // namespace idslab::stats
