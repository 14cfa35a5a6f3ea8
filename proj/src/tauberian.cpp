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

#include "idslab/tauberian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "idslab/common.hpp"
#include "idslab/paths.hpp"
#include "idslab/stats.hpp"

namespace idslab {

TauberianPair tauberian_convert(TauberianDirection direction, double exponent, double constant) {
  if (!(exponent > 1.0)) throw DomainError("tauberian_convert: exponent must exceed 1");
  if (!(constant > 0.0)) throw PreconditionError("tauberian_convert: constant must be positive");
  TauberianPair p;
  if (direction == TauberianDirection::from_transform) {
    p.gamma = exponent;
    p.B = constant;
    p.alpha = p.gamma / (p.gamma - 1.0);
    p.A = (p.gamma - 1.0) * std::pow(p.gamma, p.gamma / (1.0 - p.gamma)) *
          std::pow(p.B, 1.0 / (1.0 - p.gamma));
  } else {
    p.alpha = exponent;
    p.A = constant;
    p.gamma = p.alpha / (p.alpha - 1.0);
    const double pre = (p.gamma - 1.0) * std::pow(p.gamma, p.gamma / (1.0 - p.gamma));
    p.B = std::pow(p.A / pre, 1.0 - p.gamma);
  }
  return p;
}

double log_laplace_of_samples(std::span<const double> values, std::span<const double> weights,
                              double t) {
  if (!weights.empty() && weights.size() != values.size())
    throw PreconditionError("laplace_of_samples: size mismatch");
  std::vector<double> a(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) a[i] = t == 0.0 ? 0.0 : -t * values[i];
  if (weights.empty()) {
    const std::vector<double> ones(values.size(), 1.0);
    return stats::log_sum_exp(a, ones);
  }
  return stats::log_sum_exp(a, weights);
}

double laplace_of_samples(std::span<const double> values, std::span<const double> weights,
                          double t) {
  return std::exp(log_laplace_of_samples(values, weights, t));
}

double laplace_of_samples(std::span<const double> values, double t) {
  return laplace_of_samples(values, {}, t);
}

AsymptoticFit fit_log_asymptotics(std::span<const double> s, std::span<const double> y,
                                  double exponent, double lo, double hi,
                                  std::span<const double> y_error) {
  if (s.size() != y.size() || (!y_error.empty() && y_error.size() != y.size()))
    throw PreconditionError("fit_log_asymptotics: size mismatch");
  std::vector<double> ly(y.size()), le;
  for (std::size_t i = 0; i < y.size(); ++i)
    ly[i] = y[i] == 0.0 ? std::numeric_limits<double>::quiet_NaN() : std::log(std::abs(y[i]));
  if (!y_error.empty()) {
    le.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) le[i] = y_error[i] / std::abs(y[i]);
  }
  return fit_log_asymptotics_log(s, ly, exponent, lo, hi, le);
}

AsymptoticFit fit_log_asymptotics_log(std::span<const double> s, std::span<const double> log_y,
                                      double exponent, double lo, double hi,
                                      std::span<const double> log_error) {
  if (s.size() != log_y.size() || (!log_error.empty() && log_error.size() != log_y.size()))
    throw PreconditionError("fit_log_asymptotics: size mismatch");
  if (!(exponent > 0.0)) throw PreconditionError("fit_log_asymptotics: exponent must be positive");
  if (!(lo < hi)) throw PreconditionError("fit_log_asymptotics: empty window");
  std::vector<double> x, ly, var;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < lo || s[i] > hi || !std::isfinite(log_y[i])) continue;
    x.push_back(std::pow(std::abs(s[i]), exponent));
    ly.push_back(log_y[i]);
    if (!log_error.empty()) var.push_back(std::max(log_error[i] * log_error[i], 1e-300));
  }
  if (x.size() < 4)
    throw PreconditionError("fit_log_asymptotics: need at least 4 points in the window");
  const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
  if (!(*xmax > *xmin)) throw PreconditionError("fit_log_asymptotics: degenerate window");

  const bool weighted = !var.empty();
  const auto lin = weighted ? stats::weighted_polyfit(x, ly, var, 1) : stats::ols_polyfit(x, ly, 1);
  const auto quad =
      weighted ? stats::weighted_polyfit(x, ly, var, 2) : stats::ols_polyfit(x, ly, 2);
  AsymptoticFit fit;
  fit.hypothesis = exponent;
  fit.intercept = lin.coef[0];
  fit.constant = lin.coef[1];
  fit.std_error = lin.std_error[1];
  fit.curvature = quad.coef[2];
  fit.curvature_error = quad.std_error[2];
  const double width = *xmax - *xmin;
  const double floor = 1e-8 * (1.0 + std::abs(fit.constant)) / width;
  fit.curved = std::abs(fit.curvature) > 3.0 * fit.curvature_error &&
               std::abs(fit.curvature) > floor;
  fit.window_lo = lo;
  fit.window_hi = hi;
  fit.points = x.size();
  return fit;
}

std::string to_json(const AsymptoticFit& fit) {
  nlohmann::json j;
  j["hypothesis"] = fit.hypothesis;
  j["constant"] = fit.constant;
  j["stderr"] = fit.std_error;
  j["curvature"] = fit.curvature;
  j["curvature_stderr"] = fit.curvature_error;
  j["curved"] = fit.curved;
  j["points"] = fit.points;
  j["window"] = {fit.window_lo, fit.window_hi};
  return j.dump();
}

RieszChain riesz_consistency(double sigma, double nu, double rho) {
  if (!(sigma > 0.0) || !(sigma < 2.0))
    throw DomainError("riesz_consistency: need 0 < sigma < 2");
  if (!(nu > 0.0) || !(rho > 0.0)) throw PreconditionError("riesz_consistency: nu, rho > 0");
  RieszChain c;
  c.sigma = sigma;
  c.nu = nu;
  c.rho = rho;
  const double a = 2.0 - sigma;
  const double rate = std::pow(2.0, 6.0 / a) * a * std::pow(4.0 - sigma, -(4.0 - sigma) / a) *
                      std::pow(rho, 2.0 / a);
  // theta = nu/2 t^{2-sigma/2}: theta^{2/(2-sigma)} = (nu/2)^{2/(2-sigma)} t^{(4-sigma)/(2-sigma)}
  c.gamma = (2.0 - 0.5 * sigma) * 2.0 / a;
  c.B = std::pow(0.5 * nu, 2.0 / a) * rate;
  c.pair = tauberian_convert(TauberianDirection::from_transform, c.gamma, c.B);
  c.expected_alpha = 0.5 * (4.0 - sigma);
  c.expected_A = 1.0 / (2.0 * nu * rho);
  c.residual = std::max(std::abs(c.pair.alpha - c.expected_alpha) / c.expected_alpha,
                        std::abs(c.pair.A - c.expected_A) / c.expected_A);
  return c;
}

RieszTransform riesz_bridge_transform(double sigma, double nu, std::span<const double> t, int m,
                                      int n_t, std::uint64_t seed) {
  if (m < 2 || n_t < 2) throw PreconditionError("riesz_bridge_transform: m, n_t >= 2");
  const PathSpec spec{PathKind::bridge, 1.0, 2, n_t};
  spec.validate();
  RieszTransform out;
  out.sigma = sigma;
  out.nu = nu;
  out.m = m;
  out.n_t = n_t;
  out.functional.assign(static_cast<std::size_t>(m), 0.0);
#pragma omp parallel
  {
    std::vector<double> path(spec.stride());
#pragma omp for schedule(dynamic, 4)
    for (int k = 0; k < m; ++k) {
      sample_path(spec, seed, static_cast<std::uint64_t>(k), path);
      out.functional[static_cast<std::size_t>(k)] = riesz_intersection(path, spec, sigma);
    }
  }
  const std::vector<double> w(static_cast<std::size_t>(m), 1.0 / m);
  for (const double tt : t) {
    if (!(tt > 0.0)) throw PreconditionError("riesz_bridge_transform: t must be positive");
    const double theta = 0.5 * nu * std::pow(tt, 2.0 - 0.5 * sigma);
    const double lm = log_laplace_of_samples(out.functional, w, -theta);
    // SE of the mean of exp(theta F), relative, via shifted exponentials
    double s2 = 0.0;
    for (const double f : out.functional) {
      const double r = std::exp(theta * f - lm) - 1.0;
      s2 += r * r;
    }
    const double rel = std::sqrt(s2 / (m - 1.0) / m);
    out.t.push_back(tt);
    out.log_k.push_back(lm - std::log(kTwoPi * tt));
    out.std_error.push_back(rel);
  }
  return out;
}

}  // namespace idslab
