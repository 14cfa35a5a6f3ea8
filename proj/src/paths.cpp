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

#include "idslab/paths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "idslab/common.hpp"
#include "idslab/rng.hpp"
#include "idslab/stats.hpp"

namespace idslab {

std::string to_string(PathKind kind) {
  return kind == PathKind::motion ? "motion" : "bridge";
}

PathKind parse_path_kind(const std::string& s) {
  if (s == "motion") return PathKind::motion;
  if (s == "bridge") return PathKind::bridge;
  throw PreconditionError("unknown path kind '" + s + "' (expected motion or bridge)");
}

void PathSpec::validate() const {
  if (!(t > 0.0) || !std::isfinite(t)) throw PreconditionError("paths: horizon t must be positive");
  if (n_t < 1) throw PreconditionError("paths: n_t must be >= 1");
  if (d < 1) throw PreconditionError("paths: dimension must be >= 1");
}

void sample_path(const PathSpec& spec, std::uint64_t seed, std::uint64_t index,
                 std::span<double> out) {
  if (out.size() != spec.stride()) throw PreconditionError("sample_path: buffer size mismatch");
  const int d = spec.d;
  const double dt = spec.dt();
  Philox4x32 rng(seed, index);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int a = 0; a < d; ++a) out[static_cast<std::size_t>(a)] = 0.0;
  for (int i = 0; i < spec.n_t; ++i) {
    const double* x = out.data() + static_cast<std::size_t>(i) * d;
    double* y = out.data() + static_cast<std::size_t>(i + 1) * d;
    if (spec.kind == PathKind::motion) {
      const double sd = std::sqrt(dt);
      for (int a = 0; a < d; ++a) y[a] = x[a] + sd * normal(rng);
    } else {
      // Condition on X_{s+dt} given X_s and X_t = 0.
      const double left = spec.t - i * dt;
      const double after = spec.t - (i + 1) * dt;
      const double pull = dt / left;
      const double sd = std::sqrt(std::max(dt * after / left, 0.0));
      for (int a = 0; a < d; ++a) y[a] = x[a] * (1.0 - pull) + sd * normal(rng);
    }
  }
  if (spec.kind == PathKind::bridge) {
    for (int a = 0; a < d; ++a) out[static_cast<std::size_t>(spec.n_t) * d + a] = 0.0;
  }
}

PathEnsemble sample_paths(PathKind kind, double t, int d, int n_t, int m, std::uint64_t seed) {
  PathEnsemble e;
  e.spec = {kind, t, d, n_t};
  e.spec.validate();
  if (m < 1) throw PreconditionError("sample_paths: m must be >= 1");
  e.m = m;
  e.seed = seed;
  e.points.resize(static_cast<std::size_t>(m) * e.spec.stride());
  const std::size_t stride = e.spec.stride();
#pragma omp parallel for schedule(static)
  for (int k = 0; k < m; ++k) {
    sample_path(e.spec, seed, static_cast<std::uint64_t>(k),
                {e.points.data() + static_cast<std::size_t>(k) * stride, stride});
  }
  return e;
}

// ---------------------------------------------------------------------------
// Regions

Region Region::triangle(double a, double b) {
  Region r;
  r.shape = Shape::triangle;
  r.a = a;
  r.b = b;
  return r;
}

Region Region::rectangle(double a, double b, double c, double d) {
  Region r;
  r.shape = Shape::rectangle;
  r.a = a;
  r.b = b;
  r.c = c;
  r.d = d;
  return r;
}

void Region::validate(double t) const {
  const double tol = 1e-12 * std::max(1.0, t);
  const bool ok = shape == Shape::triangle
                      ? (a >= 0.0 && a <= b && b <= t + tol)
                      : (a >= 0.0 && a <= b && b <= c && c <= d && d <= t + tol);
  if (!ok) throw DomainError("region " + to_string(*this) + " is not ordered inside [0, t]");
}

std::string to_string(const Region& r) {
  std::ostringstream os;
  if (r.shape == Region::Shape::triangle) {
    os << "triangle(" << r.a << "," << r.b << ")";
  } else {
    os << "rectangle(" << r.a << "," << r.b << "," << r.c << "," << r.d << ")";
  }
  return os.str();
}

int required_steps(double t, double eps) {
  return static_cast<int>(std::ceil(10.0 * t / eps - 1e-9));
}

void check_silt_resolution(const PathSpec& spec, double eps) {
  if (!(eps > 0.0)) throw PreconditionError("silt: eps must be positive");
  if (spec.dt() > eps / 10.0 * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "silt: dt=" << spec.dt() << " exceeds eps/10=" << eps / 10.0
       << "; need n_t >= " << required_steps(spec.t, eps);
    throw PreconditionError(os.str());
  }
}

namespace {

int grid_index(double s, double dt, int n_t) {
  const double x = s / dt;
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-7 || r < 0 || r > n_t) {
    std::ostringstream os;
    os << "silt: region endpoint " << s << " is not on the time grid (dt=" << dt << ")";
    throw PreconditionError(os.str());
  }
  return static_cast<int>(r);
}

std::vector<double> trapezoid_weights(int count) {
  std::vector<double> w(static_cast<std::size_t>(std::max(count, 0)), 1.0);
  if (count >= 2) {
    w.front() = 0.5;
    w.back() = 0.5;
  } else if (count == 1) {
    w[0] = 0.0;
  }
  return w;
}

std::span<const double> slice(std::span<const double> path, int d, int i0, int i1) {
  return path.subspan(static_cast<std::size_t>(i0) * d,
                      static_cast<std::size_t>(i1 - i0 + 1) * d);
}

}  // namespace

double silt_value(std::span<const double> path, const PathSpec& spec, double eps,
                  const Region& region) {
  const double dt = spec.dt();
  const int d = spec.d;
  const double pref = dt * dt / (std::pow(kTwoPi * eps, 0.5 * d));
  if (region.shape == Region::Shape::triangle) {
    const int i0 = grid_index(region.a, dt, spec.n_t);
    const int i1 = grid_index(region.b, dt, spec.n_t);
    if (i1 <= i0) return 0.0;
    const auto w = trapezoid_weights(i1 - i0 + 1);
    double diag = 0.0;
    for (double v : w) diag += v * v;
    return pref * (kernel::self_sum(slice(path, d, i0, i1), w, d, eps) + 0.5 * diag);
  }
  const int i0 = grid_index(region.a, dt, spec.n_t);
  const int i1 = grid_index(region.b, dt, spec.n_t);
  const int j0 = grid_index(region.c, dt, spec.n_t);
  const int j1 = grid_index(region.d, dt, spec.n_t);
  if (i1 <= i0 || j1 <= j0) return 0.0;
  const auto wa = trapezoid_weights(i1 - i0 + 1);
  const auto wb = trapezoid_weights(j1 - j0 + 1);
  return pref * kernel::cross_sum(slice(path, d, i0, i1), wa, slice(path, d, j0, j1), wb, d, eps);
}

std::vector<SiltSample> silt_mollified(const PathEnsemble& paths, double eps,
                                       const Region& region) {
  region.validate(paths.spec.t);
  check_silt_resolution(paths.spec, eps);
  const double renorm = expected_silt(paths.spec.kind, paths.spec.t, eps, region);
  std::vector<SiltSample> out(static_cast<std::size_t>(paths.m));
#pragma omp parallel for schedule(dynamic, 4)
  for (int k = 0; k < paths.m; ++k) {
    SiltSample s;
    s.chi = silt_value(paths.path(k), paths.spec, eps, region);
    s.region = region;
    s.eps = eps;
    s.renorm = renorm;
    s.zeta = s.chi - renorm;
    out[static_cast<std::size_t>(k)] = s;
  }
  return out;
}

std::vector<SiltSample> silt_mutual(const PathEnsemble& first, double A,
                                    const PathEnsemble& second, double B, double eps) {
  if (first.m != second.m || first.spec.d != second.spec.d ||
      std::abs(first.spec.dt() - second.spec.dt()) > 1e-12 * first.spec.dt()) {
    throw PreconditionError("silt_mutual: ensembles must have equal shape and time step");
  }
  check_silt_resolution(first.spec, eps);
  check_silt_resolution(second.spec, eps);
  if (A > first.spec.t * (1 + 1e-12) || B > second.spec.t * (1 + 1e-12) || A < 0 || B < 0) {
    throw DomainError("silt_mutual: horizons exceed the sampled paths");
  }
  const int d = first.spec.d;
  const double dt = first.spec.dt();
  const int ia = grid_index(A, dt, first.spec.n_t);
  const int ib = grid_index(B, dt, second.spec.n_t);
  const auto wa = trapezoid_weights(ia + 1);
  const auto wb = trapezoid_weights(ib + 1);
  const double pref = dt * dt / std::pow(kTwoPi * eps, 0.5 * d);
  const double renorm = expected_mutual(eps, A, B);
  const Region region = Region::rectangle(0.0, A, 0.0, B);
  std::vector<SiltSample> out(static_cast<std::size_t>(first.m));
#pragma omp parallel for schedule(dynamic, 4)
  for (int k = 0; k < first.m; ++k) {
    SiltSample s;
    s.chi = (ia == 0 || ib == 0)
                ? 0.0
                : pref * kernel::cross_sum(slice(first.path(k), d, 0, ia), wa,
                                           slice(second.path(k), d, 0, ib), wb, d, eps);
    s.region = region;
    s.eps = eps;
    s.renorm = renorm;
    s.zeta = s.chi - renorm;
    out[static_cast<std::size_t>(k)] = s;
  }
  return out;
}

std::vector<std::vector<double>> silt_stream(const PathSpec& spec, int m, std::uint64_t seed,
                                             std::span<const double> eps_list,
                                             const Region& region) {
  spec.validate();
  region.validate(spec.t);
  for (double e : eps_list) check_silt_resolution(spec, e);
  std::vector<std::vector<double>> out(eps_list.size(), std::vector<double>(static_cast<std::size_t>(m)));
#pragma omp parallel
  {
    std::vector<double> buf(spec.stride());
#pragma omp for schedule(dynamic, 4)
    for (int k = 0; k < m; ++k) {
      sample_path(spec, seed, static_cast<std::uint64_t>(k), buf);
      for (std::size_t e = 0; e < eps_list.size(); ++e) {
        out[e][static_cast<std::size_t>(k)] = silt_value(buf, spec, eps_list[e], region);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pair-sum kernels

namespace kernel {

double self_sum_reference(std::span<const double> pts, std::span<const double> w, int d,
                          double eps) {
  const std::size_t n = w.size();
  const double inv = 1.0 / (2.0 * eps);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        const double dx = pts[i * d + a] - pts[j * d + a];
        r2 += dx * dx;
      }
      acc += w[j] * std::exp(-r2 * inv);
    }
    total += w[i] * acc;
  }
  return total;
}

double cross_sum_reference(std::span<const double> a, std::span<const double> wa,
                           std::span<const double> b, std::span<const double> wb, int d,
                           double eps) {
  const double inv = 1.0 / (2.0 * eps);
  double total = 0.0;
  for (std::size_t i = 0; i < wa.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < wb.size(); ++j) {
      double r2 = 0.0;
      for (int k = 0; k < d; ++k) {
        const double dx = a[i * d + k] - b[j * d + k];
        r2 += dx * dx;
      }
      acc += wb[j] * std::exp(-r2 * inv);
    }
    total += wa[i] * acc;
  }
  return total;
}

namespace {

// Points of a 2D set bucketed into square cells of side >= the cutoff radius,
// stored contiguously per cell.
struct CellList {
  double x0 = 0.0;
  double y0 = 0.0;
  double cell = 1.0;
  int gx = 1;
  int gy = 1;
  std::vector<int> start;  // gx*gy + 1
  std::vector<double> xs, ys, ws;

  CellList(std::span<const double> pts, std::span<const double> w, double rc) {
    const std::size_t n = w.size();
    double xmin = std::numeric_limits<double>::infinity();
    double xmax = -xmin;
    double ymin = xmin;
    double ymax = -xmin;
    for (std::size_t i = 0; i < n; ++i) {
      xmin = std::min(xmin, pts[2 * i]);
      xmax = std::max(xmax, pts[2 * i]);
      ymin = std::min(ymin, pts[2 * i + 1]);
      ymax = std::max(ymax, pts[2 * i + 1]);
    }
    x0 = xmin;
    y0 = ymin;
    cell = rc;
    const double cap = 4.0 * static_cast<double>(n) + 16.0;
    while (true) {
      const double fx = std::floor((xmax - xmin) / cell) + 1.0;
      const double fy = std::floor((ymax - ymin) / cell) + 1.0;
      if (fx * fy <= cap) {
        gx = static_cast<int>(fx);
        gy = static_cast<int>(fy);
        break;
      }
      cell *= 2.0;
    }
    start.assign(static_cast<std::size_t>(gx) * gy + 1, 0);
    std::vector<int> id(n);
    for (std::size_t i = 0; i < n; ++i) {
      id[i] = cell_of(pts[2 * i], pts[2 * i + 1]);
      ++start[static_cast<std::size_t>(id[i]) + 1];
    }
    for (std::size_t c = 1; c < start.size(); ++c) start[c] += start[c - 1];
    xs.resize(n);
    ys.resize(n);
    ws.resize(n);
    std::vector<int> fill(start.begin(), start.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = static_cast<std::size_t>(fill[static_cast<std::size_t>(id[i])]++);
      xs[p] = pts[2 * i];
      ys[p] = pts[2 * i + 1];
      ws[p] = w[i];
    }
  }

  [[nodiscard]] int cx(double x) const {
    return std::clamp(static_cast<int>((x - x0) / cell), 0, gx - 1);
  }
  [[nodiscard]] int cy(double y) const {
    return std::clamp(static_cast<int>((y - y0) / cell), 0, gy - 1);
  }
  [[nodiscard]] int cell_of(double x, double y) const { return cx(x) * gy + cy(y); }
};

inline double row_sum(double xi, double yi, const double* xs, const double* ys,
                      const double* ws, int lo, int hi, double inv) {
  double acc = 0.0;
  for (int j = lo; j < hi; ++j) {
    const double dx = xi - xs[j];
    const double dy = yi - ys[j];
    acc += ws[j] * std::exp(-(dx * dx + dy * dy) * inv);
  }
  return acc;
}

}  // namespace

double self_sum(std::span<const double> pts, std::span<const double> w, int d, double eps) {
  if (d != 2 || w.size() < 64) return self_sum_reference(pts, w, d, eps);
  const double rc = std::sqrt(2.0 * eps * kCutoff);
  const CellList cl(pts, w, rc);
  const double inv = 1.0 / (2.0 * eps);
  const double* xs = cl.xs.data();
  const double* ys = cl.ys.data();
  const double* ws = cl.ws.data();
  double total = 0.0;
  static constexpr int kHalf[4][2] = {{1, -1}, {1, 0}, {1, 1}, {0, 1}};
  for (int ix = 0; ix < cl.gx; ++ix) {
    for (int iy = 0; iy < cl.gy; ++iy) {
      const int c = ix * cl.gy + iy;
      const int lo = cl.start[static_cast<std::size_t>(c)];
      const int hi = cl.start[static_cast<std::size_t>(c) + 1];
      if (lo == hi) continue;
      double cell_total = 0.0;
      for (int i = lo; i < hi; ++i) {
        double acc = row_sum(xs[i], ys[i], xs, ys, ws, i + 1, hi, inv);
        for (const auto& off : kHalf) {
          const int jx = ix + off[0];
          const int jy = iy + off[1];
          if (jx < 0 || jx >= cl.gx || jy < 0 || jy >= cl.gy) continue;
          const int nc = jx * cl.gy + jy;
          acc += row_sum(xs[i], ys[i], xs, ys, ws, cl.start[static_cast<std::size_t>(nc)],
                         cl.start[static_cast<std::size_t>(nc) + 1], inv);
        }
        cell_total += ws[i] * acc;
      }
      total += cell_total;
    }
  }
  return total;
}

double cross_sum(std::span<const double> a, std::span<const double> wa,
                 std::span<const double> b, std::span<const double> wb, int d, double eps) {
  if (d != 2 || wb.size() < 64) return cross_sum_reference(a, wa, b, wb, d, eps);
  const double rc = std::sqrt(2.0 * eps * kCutoff);
  const CellList cl(b, wb, rc);
  const double inv = 1.0 / (2.0 * eps);
  double total = 0.0;
  for (std::size_t i = 0; i < wa.size(); ++i) {
    const double xi = a[2 * i];
    const double yi = a[2 * i + 1];
    // Cells overlapping the cutoff disc around the point.
    const int x_lo = cl.cx(xi - rc);
    const int x_hi = cl.cx(xi + rc);
    const int y_lo = cl.cy(yi - rc);
    const int y_hi = cl.cy(yi + rc);
    double acc = 0.0;
    for (int ix = x_lo; ix <= x_hi; ++ix) {
      for (int iy = y_lo; iy <= y_hi; ++iy) {
        const auto c = static_cast<std::size_t>(ix * cl.gy + iy);
        acc += row_sum(xi, yi, cl.xs.data(), cl.ys.data(), cl.ws.data(), cl.start[c],
                       cl.start[c + 1], inv);
      }
    }
    total += wa[i] * acc;
  }
  return total;
}

}  // namespace kernel

// ---------------------------------------------------------------------------
// Closed-form expectations

namespace {

double xlogx_minus_x(double x) { return x > 0.0 ? x * std::log(x) - x : 0.0; }

// Second antiderivative K of w -> E p_eps(increment over lag w), K(0) = K'(0) = 0.
struct LagKernel {
  PathKind kind;
  double t;
  double eps;
  double q = 0.0;
  double P = 0.0;
  double scale = 0.0;

  LagKernel(PathKind k, double t_, double e) : kind(k), t(t_), eps(e) {
    if (kind == PathKind::bridge) {
      // eps + w - w^2/t = (P - w)(w + q)/t with P = S + t/2, q = S - t/2.
      const double S = std::sqrt(eps * t + 0.25 * t * t);
      P = S + 0.5 * t;
      q = eps * t / P;
      scale = t / (2.0 * S) / kTwoPi;
    }
  }

  [[nodiscard]] double operator()(double w) const {
    if (kind == PathKind::motion) {
      return (xlogx_minus_x(eps + w) - xlogx_minus_x(eps) - w * std::log(eps)) / kTwoPi;
    }
    return scale * (xlogx_minus_x(q + w) - xlogx_minus_x(q) - w * std::log(q) +
                    xlogx_minus_x(P - w) - xlogx_minus_x(P) + w * std::log(P));
  }
};

}  // namespace

double expected_silt(PathKind kind, double t, double eps, const Region& region) {
  if (!(eps > 0.0)) throw DomainError("expected_silt: eps must be positive");
  if (!(t > 0.0)) throw DomainError("expected_silt: t must be positive");
  region.validate(t);
  const LagKernel K(kind, t, eps);
  if (region.shape == Region::Shape::triangle) return K(region.b - region.a);
  const double a = region.a, b = region.b, c = region.c, d = region.d;
  return K(d - a) - K(c - a) - K(d - b) + K(c - b);
}

double expected_mutual(double eps, double A, double B) {
  if (!(eps > 0.0)) throw DomainError("expected_mutual: eps must be positive");
  if (A < 0.0 || B < 0.0) throw DomainError("expected_mutual: negative horizon");
  const LagKernel K(PathKind::motion, 1.0, eps);
  return K(A + B) - K(A) - K(B);
}

double girsanov_weight(std::span<const double> b_u, double t, double u,
                       std::span<const double> x) {
  if (!(u > 0.0) || !(u < t)) throw DomainError("girsanov_weight: need 0 < u < t");
  if (b_u.size() != x.size()) throw PreconditionError("girsanov_weight: dimension mismatch");
  const double d = static_cast<double>(x.size());
  double xx = 0.0, bb = 0.0, xb = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    xx += x[a] * x[a];
    bb += b_u[a] * b_u[a];
    xb += x[a] * b_u[a];
  }
  const double rest = t - u;
  return std::pow(t / rest, 0.5 * d) *
         std::exp(-xx * u / (2.0 * t * rest) - bb / (2.0 * rest) + xb / rest);
}

// ---------------------------------------------------------------------------
// Moment and tail estimators

ExpMoment exp_moment(std::span<const double> zeta, double t, int resamples, std::uint64_t seed,
                     double level) {
  if (zeta.empty()) throw PreconditionError("exp_moment: no samples");
  ExpMoment r;
  if (t == 0.0) {
    r.estimate = r.lo = r.hi = 1.0;
    return r;
  }
  const std::size_t m = zeta.size();
  std::vector<double> a(m);
  for (std::size_t i = 0; i < m; ++i) a[i] = t * zeta[i];
  const std::vector<double> ones(m, 1.0);
  r.log_estimate = stats::log_sum_exp(a, ones) - std::log(static_cast<double>(m));

  // Share of the mean carried by the top 1% of samples.
  std::vector<double> rel(m);
  const double amax = *std::max_element(a.begin(), a.end());
  for (std::size_t i = 0; i < m; ++i) rel[i] = std::exp(a[i] - amax);
  std::vector<double> sorted = rel;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t top = std::max<std::size_t>(1, (m + 99) / 100);
  double total = 0.0, head = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    total += sorted[i];
    if (i < top) head += sorted[i];
  }
  r.heavy_tail = m >= 2 && head > 0.5 * total;

  std::vector<double> boot(static_cast<std::size_t>(std::max(resamples, 0)));
  for (int b = 0; b < resamples; ++b) {
    Philox4x32 rng(seed, static_cast<std::uint64_t>(b));
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto j = std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(m)), m - 1);
      s += rel[j];
    }
    boot[static_cast<std::size_t>(b)] = amax + std::log(s / static_cast<double>(m));
  }
  double log_lo = r.log_estimate, log_hi = r.log_estimate;
  if (resamples > 1 && m > 1) {
    const double tail = 0.5 * (1.0 - level);
    log_lo = stats::quantile(boot, tail);
    log_hi = stats::quantile(boot, 1.0 - tail);
  }
  constexpr double kMaxLog = 709.0;
  if (r.log_estimate > kMaxLog) {
    r.overflow = true;
    r.estimate = std::numeric_limits<double>::infinity();
    std::ostringstream os;
    os << "exp_moment: mean of exp(t*zeta) overflows double (log estimate " << r.log_estimate
       << ")";
    r.diagnostic = os.str();
  } else {
    r.estimate = std::exp(r.log_estimate);
  }
  r.lo = std::exp(std::min(log_lo, kMaxLog + 1.0));
  r.hi = std::exp(std::min(log_hi, kMaxLog + 1.0));
  if (r.heavy_tail && r.diagnostic.empty()) {
    r.diagnostic = "exp_moment: top 1% of samples carry more than half of the mean";
  }
  return r;
}

RateFit tail_rate(std::span<const double> zeta, std::span<const double> thresholds,
                  std::size_t min_exceedances) {
  if (zeta.empty()) throw PreconditionError("tail_rate: no samples");
  const std::size_t m = zeta.size();
  RateFit fit;
  bool ok = thresholds.size() >= 2;
  std::ostringstream counts;
  for (double u : thresholds) {
    const auto k = static_cast<std::size_t>(
        std::count_if(zeta.begin(), zeta.end(), [u](double z) { return z >= u; }));
    fit.thresholds.push_back(u);
    fit.exceedances.push_back(k);
    fit.tail_prob.push_back(static_cast<double>(k) / static_cast<double>(m));
    counts << " u=" << u << ":" << k;
    // A threshold no sample falls below carries no information about the slope.
    if (k < min_exceedances || m - k < min_exceedances) ok = false;
  }
  if (!ok) {
    throw PreconditionError("tail_rate: need >= 2 thresholds, each with >= " +
                            std::to_string(min_exceedances) +
                            " exceedances and non-exceedances; attained" + counts.str() +
                            " of " + std::to_string(m));
  }
  std::vector<double> y, var;
  for (std::size_t i = 0; i < fit.thresholds.size(); ++i) {
    const double p = fit.tail_prob[i];
    y.push_back(std::log(p));
    var.push_back((1.0 - p) / (static_cast<double>(m) * p));
  }
  const auto pf = stats::weighted_polyfit(fit.thresholds, y, var, 1);
  fit.intercept = pf.coef[0];
  fit.rate = pf.coef[1];
  fit.std_error = pf.std_error[1];
  return fit;
}

double riesz_intersection(std::span<const double> path, const PathSpec& spec, double sigma) {
  const int d = spec.d;
  if (!(sigma > 0.0) || !(sigma < std::min(2.0, static_cast<double>(d)))) {
    throw PreconditionError("riesz_intersection: need 0 < sigma < min(2, d)");
  }
  const int n = spec.n_t + 1;
  const double dt = spec.dt();
  const auto w = trapezoid_weights(n);
  double off = 0.0;
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = i + 1; j < n; ++j) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        const double dx = path[static_cast<std::size_t>(i) * d + a] -
                          path[static_cast<std::size_t>(j) * d + a];
        r2 += dx * dx;
      }
      // Bridge endpoints coincide; that single corner pair is left out.
      if (r2 > 0.0) acc += w[static_cast<std::size_t>(j)] * std::pow(r2, -0.5 * sigma);
    }
    off += w[static_cast<std::size_t>(i)] * acc;
  }
  const double abs_moment = std::pow(2.0, -0.5 * sigma) * std::tgamma(0.5 * (d - sigma)) /
                            std::tgamma(0.5 * d);
  const double diag = -2.0 * std::riemann_zeta(0.5 * sigma) * abs_moment * spec.t *
                      std::pow(dt, 1.0 - 0.5 * sigma);
  return 2.0 * off * dt * dt + diag;
}

}  // namespace idslab
