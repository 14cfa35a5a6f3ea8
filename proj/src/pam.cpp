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

#include "idslab/pam.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "idslab/rng.hpp"
#include "idslab/stats.hpp"
#include "spectral.hpp"

namespace idslab {

std::string to_string(InitialKind kind) {
  switch (kind) {
    case InitialKind::delta: return "delta";
    case InitialKind::ones: return "ones";
    case InitialKind::custom: return "custom";
  }
  return "?";
}

InitialDatum InitialDatum::delta(int i, int j) {
  InitialDatum d;
  d.kind = InitialKind::delta;
  d.i0 = i;
  d.j0 = j;
  return d;
}

InitialDatum InitialDatum::ones() { return {}; }

InitialDatum InitialDatum::custom(std::vector<double> values) {
  InitialDatum d;
  d.kind = InitialKind::custom;
  d.values = std::move(values);
  return d;
}

std::vector<double> InitialDatum::materialize(const GridSpec& grid) const {
  switch (kind) {
    case InitialKind::ones: return std::vector<double>(grid.size(), 1.0);
    case InitialKind::delta: {
      if (i0 < 0 || j0 < 0 || i0 >= grid.n || j0 >= grid.n) {
        throw PreconditionError("InitialDatum: delta node outside the grid");
      }
      std::vector<double> u(grid.size(), 0.0);
      const double h = grid.h();
      u[grid.index(i0, j0)] = 1.0 / (h * h);
      return u;
    }
    case InitialKind::custom:
      if (values.size() != grid.size()) throw PreconditionError("InitialDatum: custom size mismatch");
      return values;
  }
  return {};
}

bool InitialDatum::nonnegative() const {
  if (kind != InitialKind::custom) return true;
  return std::all_of(values.begin(), values.end(), [](double v) { return v >= 0.0; });
}

PamPropagator::PamPropagator(const GridSpec& grid, std::span<const double> potential, double dt)
    : grid_(grid), dt_(dt) {
  grid.validate();
  if (potential.size() != grid.size()) throw PreconditionError("PamPropagator: potential size mismatch");
  if (!(dt > 0.0)) throw PreconditionError("PamPropagator: dt must be positive");
  const int n = grid.n;
  const double h = grid.h();
  half_.resize(grid.size());
  full_.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    half_[k] = std::exp(0.5 * dt * potential[k]);
    full_[k] = half_[k] * half_[k];
  }
  std::vector<double> mu(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) {
    const double s = std::sin(j * kPi / (2.0 * (n + 1)));
    mu[static_cast<std::size_t>(j - 1)] = 2.0 / (h * h) * s * s;
  }
  // RODFT00 applied twice multiplies by 2(n+1) per axis.
  const double norm = 1.0 / (4.0 * (n + 1.0) * (n + 1.0));
  heat_.resize(grid.size());
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      heat_[grid.index(a, b)] =
          std::exp(-dt * (mu[static_cast<std::size_t>(a)] + mu[static_cast<std::size_t>(b)])) * norm;
    }
  }
}

void PamPropagator::advance(std::span<double> u, int steps, bool clamp) const {
  if (u.size() != grid_.size()) throw PreconditionError("PamPropagator: state size mismatch");
  if (steps <= 0) return;
  const std::size_t N = u.size();
  for (std::size_t k = 0; k < N; ++k) u[k] *= half_[k];
  for (int s = 0; s < steps; ++s) {
    spectral::r2r_2d(u, grid_.n, spectral::R2R::dst1);
    for (std::size_t k = 0; k < N; ++k) u[k] *= heat_[k];
    spectral::r2r_2d(u, grid_.n, spectral::R2R::dst1);
    if (clamp) {
      for (std::size_t k = 0; k < N; ++k) u[k] = std::max(u[k], 0.0);
    }
    const auto& pot = s + 1 < steps ? full_ : half_;
    for (std::size_t k = 0; k < N; ++k) u[k] *= pot[k];
  }
}

double max_pam_step(double eps, std::span<const double> potential) {
  double vmax = 0.0;
  for (double v : potential) vmax = std::max(vmax, std::abs(v));
  const double inv = vmax > 0.0 ? 1.0 / vmax : std::numeric_limits<double>::infinity();
  return std::min(eps, inv) / 10.0;
}

namespace {

int step_count(double t, double dt) {
  if (!(t >= 0.0)) throw PreconditionError("evolve: t must be nonnegative");
  if (!(dt > 0.0)) throw PreconditionError("evolve: dt must be positive");
  return t == 0.0 ? 0 : std::max(1, static_cast<int>(std::ceil(t / dt - 1e-12)));
}

std::string step_warning(double dt, double eps, std::span<const double> potential, double t) {
  const double limit = max_pam_step(eps, potential);
  if (dt <= limit * (1.0 + 1e-12)) return {};
  double vmax = 0.0;
  for (double v : potential) vmax = std::max(vmax, std::abs(v));
  std::ostringstream os;
  os << "evolve: dt=" << dt << " exceeds the guard min(eps, 1/max|V|)/10=" << limit
     << "; splitting bias estimate ~ t dt^2 max|V| / (12 eps) = "
     << t * dt * dt * vmax / (12.0 * eps);
  return os.str();
}

}  // namespace

PamState evolve(const GridSpec& grid, const NoiseRealization& noise, const InitialDatum& initial,
                double t, double dt) {
  if (!(noise.grid == grid)) throw PreconditionError("evolve: noise grid does not match");
  const auto v = noise.potential();
  const int steps = step_count(t, dt);
  PamState st;
  st.grid = grid;
  st.t = t;
  st.initial = initial.kind;
  st.steps = steps;
  st.dt = steps > 0 ? t / steps : 0.0;
  st.u = initial.materialize(grid);
  if (steps == 0) return st;
  st.warning = step_warning(st.dt, noise.eps, v, t);
  const PamPropagator prop(grid, v, st.dt);
  prop.advance(st.u, steps, initial.nonnegative());
  return st;
}

namespace {

double probe_value(const PamPropagator& prop, int steps, std::uint64_t seed, int k) {
  const std::size_t N = prop.grid().size();
  std::vector<double> z(N);
  Philox4x32 rng(seed, static_cast<std::uint64_t>(k));
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < N; ++i) {
    if (i % 64 == 0) bits = rng();
    z[i] = (bits >> (i % 64)) & 1u ? 1.0 : -1.0;
  }
  std::vector<double> w = z;
  prop.advance(w, steps, false);
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) acc += z[i] * w[i];
  return acc;
}

TraceEstimate summarize_trace(const std::vector<double>& vals) {
  TraceEstimate r;
  const auto ms = stats::mean_std(vals);
  r.estimate = ms.mean;
  r.std_error = vals.size() > 1 ? ms.std_error : 0.0;
  r.lo = r.estimate - 3.0 * r.std_error;
  r.hi = r.estimate + 3.0 * r.std_error;
  r.probes = static_cast<int>(vals.size());
  return r;
}

PamPropagator trace_propagator(const GridSpec& grid, const NoiseRealization& noise, double t,
                               int probes, double dt, int& steps) {
  if (probes < 16) throw PreconditionError("heat_trace: need at least 16 probes");
  if (!(noise.grid == grid)) throw PreconditionError("heat_trace: noise grid does not match");
  if (!(t > 0.0)) throw PreconditionError("heat_trace: t must be positive");
  steps = step_count(t, dt);
  return PamPropagator(grid, noise.potential(), t / steps);
}

}  // namespace

TraceEstimate heat_trace(const GridSpec& grid, const NoiseRealization& noise, double t,
                         int probes, double dt, std::uint64_t seed) {
  int steps = 0;
  const auto prop = trace_propagator(grid, noise, t, probes, dt, steps);
  std::vector<double> vals(static_cast<std::size_t>(probes));
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < probes; ++k) vals[static_cast<std::size_t>(k)] = probe_value(prop, steps, seed, k);
  return summarize_trace(vals);
}

TraceEstimate heat_trace_reference(const GridSpec& grid, const NoiseRealization& noise, double t,
                                   int probes, double dt, std::uint64_t seed) {
  int steps = 0;
  const auto prop = trace_propagator(grid, noise, t, probes, dt, steps);
  std::vector<double> vals(static_cast<std::size_t>(probes));
  for (int k = 0; k < probes; ++k) vals[static_cast<std::size_t>(k)] = probe_value(prop, steps, seed, k);
  return summarize_trace(vals);
}

MassDuality mass_duality_check(const GridSpec& grid, const NoiseRealization& noise, int i0,
                               int j0, double t, double dt) {
  const auto a = evolve(grid, noise, InitialDatum::delta(i0, j0), t, dt);
  const auto b = evolve(grid, noise, InitialDatum::ones(), t, dt);
  const double h = grid.h();
  MassDuality r;
  double s = 0.0;
  for (double v : a.u) s += v;
  r.delta_mass = s * h * h;
  r.ones_value = b.u[grid.index(i0, j0)];
  r.residual = std::abs(r.delta_mass - r.ones_value) / std::max(std::abs(r.ones_value), 1e-300);
  return r;
}

double interpolate(const GridSpec& grid, std::span<const double> values, double x, double y) {
  const double h = grid.h();
  const int n = grid.n;
  auto locate = [&](double c, int& i, double& f) {
    const double p = (c + 0.5 * grid.L) / h - 1.0;  // node coordinate
    if (p <= 0.0) {
      i = 0;
      f = 0.0;
    } else if (p >= n - 1) {
      i = std::max(n - 2, 0);
      f = n >= 2 ? 1.0 : 0.0;
    } else {
      i = static_cast<int>(std::floor(p));
      f = p - i;
    }
  };
  int i = 0, j = 0;
  double fx = 0.0, fy = 0.0;
  locate(x, i, fx);
  locate(y, j, fy);
  if (n == 1) return values[0];
  const double v00 = values[grid.index(i, j)];
  const double v10 = values[grid.index(i + 1, j)];
  const double v01 = values[grid.index(i, j + 1)];
  const double v11 = values[grid.index(i + 1, j + 1)];
  return (1 - fx) * ((1 - fy) * v00 + fy * v01) + fx * ((1 - fy) * v10 + fy * v11);
}

FeynmanKac feynman_kac_estimate(const NoiseRealization& noise, double t, double x0, double y0,
                                int m, std::uint64_t seed, int n_t) {
  const GridSpec& grid = noise.grid;
  if (!(t > 0.0)) throw PreconditionError("feynman_kac_estimate: t must be positive");
  if (m < 2) throw PreconditionError("feynman_kac_estimate: need m >= 2");
  const double half = 0.5 * grid.L;
  if (!(std::abs(x0) < half && std::abs(y0) < half)) {
    throw PreconditionError("feynman_kac_estimate: start point outside the box");
  }
  PathSpec spec{PathKind::bridge, t, 2, n_t > 0 ? n_t : required_steps(t, noise.eps)};
  spec.validate();
  check_silt_resolution(spec, noise.eps);
  const double dt = spec.dt();
  const auto v = noise.potential();
  std::vector<double> weight(static_cast<std::size_t>(m));
  std::vector<double> surv(static_cast<std::size_t>(m));
#pragma omp parallel
  {
    std::vector<double> path(spec.stride());
#pragma omp for schedule(dynamic, 16)
    for (int k = 0; k < m; ++k) {
      sample_path(spec, seed, static_cast<std::uint64_t>(k), path);
      double integral = 0.0;
      double log_survival = 0.0;
      bool dead = false;
      double prev_d[4] = {0, 0, 0, 0};
      for (int i = 0; i <= spec.n_t; ++i) {
        const double x = x0 + path[static_cast<std::size_t>(2 * i)];
        const double y = y0 + path[static_cast<std::size_t>(2 * i + 1)];
        const double d[4] = {half - x, x + half, half - y, y + half};
        if (d[0] <= 0 || d[1] <= 0 || d[2] <= 0 || d[3] <= 0) {
          dead = true;
          break;
        }
        if (i > 0) {
          for (int w = 0; w < 4; ++w) log_survival += std::log1p(-std::exp(-2.0 * prev_d[w] * d[w] / dt));
        }
        std::copy(d, d + 4, prev_d);
        const double wt = (i == 0 || i == spec.n_t) ? 0.5 : 1.0;
        integral += wt * interpolate(grid, v, x, y) * dt;
      }
      const auto idx = static_cast<std::size_t>(k);
      surv[idx] = dead ? 0.0 : std::exp(log_survival);
      weight[idx] = dead ? 0.0 : std::exp(integral + log_survival);
    }
  }
  FeynmanKac r;
  r.m = m;
  const auto ms = stats::mean_std(weight);
  const double p = 1.0 / (kTwoPi * t);
  r.estimate = p * ms.mean;
  r.std_error = p * ms.std_error;
  r.lo = r.estimate - 3.0 * r.std_error;
  r.hi = r.estimate + 3.0 * r.std_error;
  r.survival = stats::mean_std(surv).mean;
  if (r.survival == 0.0) r.warning = "feynman_kac_estimate: every path left the box; estimate is 0";
  return r;
}

std::vector<AnnealedMoment> annealed_moment(double t, std::span<const double> eps_list, int m,
                                            std::uint64_t seed, int resamples) {
  if (!(t > 0.0)) throw PreconditionError("annealed_moment: t must be positive");
  if (eps_list.empty()) throw PreconditionError("annealed_moment: empty eps list");
  if (m < 2) throw PreconditionError("annealed_moment: need m >= 2");
  std::vector<double> scaled(eps_list.size());
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    if (!(eps_list[k] > 0.0)) throw PreconditionError("annealed_moment: eps must be positive");
    scaled[k] = eps_list[k] / t;
    smallest = std::min(smallest, scaled[k]);
  }
  // chi^t_eps has the law of t chi^1_{eps/t}; one unit-horizon ensemble
  // serves every eps.
  const PathSpec spec{PathKind::bridge, 1.0, 2, required_steps(1.0, smallest)};
  const Region tri = Region::triangle(0.0, 1.0);
  const auto chi = silt_stream(spec, m, seed, scaled, tri);
  std::vector<AnnealedMoment> out;
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    const double eps = eps_list[k];
    const double mean_chi = expected_silt(PathKind::bridge, 1.0, scaled[k], tri);
    const double c = renorm_constant(eps);
    std::vector<double> zeta(chi[k].size());
    for (std::size_t i = 0; i < zeta.size(); ++i) zeta[i] = chi[k][i] - mean_chi;
    const auto em = exp_moment(zeta, t, resamples, seed ^ 0xa11eu);
    AnnealedMoment a;
    a.t = t;
    a.eps = eps;
    a.m = m;
    a.n_t = spec.n_t;
    a.log_gap = t * (mean_chi - std::log(t / eps) / kTwoPi);
    // form2 = t^{t/2pi-1}/(2pi) E e^{t zeta}; form1 = form2 e^{log_gap}.
    a.log_form2 = (t / kTwoPi - 1.0) * std::log(t) - std::log(kTwoPi) + em.log_estimate;
    // form1 from its own definition, exp(t chi - c t) / (2 pi t).
    std::vector<double> a1(chi[k].size());
    for (std::size_t i = 0; i < a1.size(); ++i) a1[i] = t * chi[k][i] - c * t;
    const std::vector<double> ones(a1.size(), 1.0);
    a.log_form1 = stats::log_sum_exp(a1, ones) - std::log(static_cast<double>(a1.size())) -
                  std::log(kTwoPi * t);
    a.form1 = std::exp(a.log_form1);
    a.form2 = std::exp(a.log_form2);
    // Interval: the bootstrap of the centred moment carries over by the
    // deterministic factor.
    const double factor = a.log_form1 - em.log_estimate;
    a.lo = std::exp(std::log(em.lo) + factor);
    a.hi = std::exp(std::log(em.hi) + factor);
    a.heavy_tail = em.heavy_tail;
    a.overflow = em.overflow || a.log_form1 > 709.0;
    a.diagnostic = em.diagnostic;
    out.push_back(std::move(a));
  }
  return out;
}

AnnealedMoment annealed_moment(double t, double eps, int m, std::uint64_t seed) {
  const double e[1] = {eps};
  return annealed_moment(t, e, m, seed).front();
}

}  // namespace idslab
