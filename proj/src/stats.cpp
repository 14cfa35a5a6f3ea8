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

#include "idslab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "idslab/common.hpp"
#include "idslab/rng.hpp"

namespace idslab::stats {

MeanStd mean_std(std::span<const double> x) {
  MeanStd r;
  r.count = x.size();
  if (x.empty()) return r;
  double m = 0.0;
  double s = 0.0;
  std::size_t k = 0;
  for (double v : x) {
    ++k;
    const double d = v - m;
    m += d / static_cast<double>(k);
    s += d * (v - m);
  }
  r.mean = m;
  if (x.size() > 1) {
    r.stddev = std::sqrt(s / static_cast<double>(x.size() - 1));
    r.std_error = r.stddev / std::sqrt(static_cast<double>(x.size()));
  }
  return r;
}

double covariance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw PreconditionError("covariance: need two equal-length samples of size >= 2");
  }
  const double mx = mean_std(x).mean;
  const double my = mean_std(y).mean;
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
  return s / static_cast<double>(x.size() - 1);
}

Interval bootstrap_mean_interval(std::span<const double> x, int resamples,
                                 double level, std::uint64_t seed) {
  if (x.empty()) throw PreconditionError("bootstrap: empty sample");
  if (x.size() == 1 || resamples < 1) return {x[0], x[0]};
  std::vector<double> means(static_cast<std::size_t>(resamples));
  const auto n = x.size();
  for (int b = 0; b < resamples; ++b) {
    Philox4x32 rng(seed, static_cast<std::uint64_t>(b));
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
      s += x[std::min(j, n - 1)];
    }
    means[static_cast<std::size_t>(b)] = s / static_cast<double>(n);
  }
  const double tail = 0.5 * (1.0 - level);
  return {quantile(means, tail), quantile(means, 1.0 - tail)};
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw PreconditionError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double sq = std::sqrt(ne);
  // Stephens' finite-sample correction of the asymptotic law.
  const double lambda = (sq + 0.12 + 0.11 / sq) * d;
  return {d, kolmogorov_survival(lambda)};
}

namespace {

PolyFit solve_weighted(std::span<const double> x, std::span<const double> y,
                       const std::vector<double>& w, int degree) {
  const auto n = x.size();
  const int p = degree + 1;
  if (y.size() != n || w.size() != n) throw PreconditionError("polyfit: size mismatch");
  if (static_cast<int>(n) < p) throw PreconditionError("polyfit: fewer points than coefficients");
  Eigen::MatrixXd A(static_cast<Eigen::Index>(n), p);
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double sw = std::sqrt(w[i]);
    double xp = 1.0;
    for (int k = 0; k < p; ++k) {
      A(static_cast<Eigen::Index>(i), k) = sw * xp;
      xp *= x[i];
    }
    b(static_cast<Eigen::Index>(i)) = sw * y[i];
  }
  const Eigen::MatrixXd AtA = A.transpose() * A;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(AtA);
  const Eigen::VectorXd beta = ldlt.solve(A.transpose() * b);
  const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  PolyFit fit;
  fit.points = n;
  fit.coef.assign(beta.data(), beta.data() + p);
  fit.std_error.resize(static_cast<std::size_t>(p));
  for (int k = 0; k < p; ++k) fit.std_error[static_cast<std::size_t>(k)] = std::sqrt(std::max(cov(k, k), 0.0));
  fit.chi2 = (A * beta - b).squaredNorm();
  return fit;
}

}  // namespace

PolyFit weighted_polyfit(std::span<const double> x, std::span<const double> y,
                         std::span<const double> variance, int degree) {
  std::vector<double> w(variance.size());
  for (std::size_t i = 0; i < variance.size(); ++i) {
    if (!(variance[i] > 0.0)) throw PreconditionError("weighted_polyfit: variances must be positive");
    w[i] = 1.0 / variance[i];
  }
  return solve_weighted(x, y, w, degree);
}

PolyFit ols_polyfit(std::span<const double> x, std::span<const double> y, int degree) {
  std::vector<double> w(x.size(), 1.0);
  PolyFit fit = solve_weighted(x, y, w, degree);
  const auto dof = static_cast<double>(fit.points) - static_cast<double>(degree + 1);
  const double s2 = dof > 0 ? fit.chi2 / dof : 0.0;
  for (auto& se : fit.std_error) se *= std::sqrt(s2);
  return fit;
}

double log_sum_exp(std::span<const double> a, std::span<const double> w) {
  if (a.size() != w.size()) throw PreconditionError("log_sum_exp: size mismatch");
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (w[i] > 0.0) mx = std::max(mx, a[i]);
  }
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (w[i] > 0.0) s += w[i] * std::exp(a[i] - mx);
  }
  return mx + std::log(s);
}

double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw PreconditionError("quantile: empty sample");
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, x.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return x[lo] + frac * (x[hi] - x[lo]);
}

}  // namespace idslab::stats
