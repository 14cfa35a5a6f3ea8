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

#include "idslab/variational.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "idslab/common.hpp"

namespace idslab {

namespace {

struct GaussRule {
  std::vector<double> x;  // on [0, 1]
  std::vector<double> w;
};

GaussRule gauss_legendre(int n) {
  GaussRule rule;
  for (int i = 1; i <= n; ++i) {
    double x = std::cos(kPi * (i - 0.25) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const double p = std::legendre(n, x);
      const double dp = n * (x * p - std::legendre(n - 1, x)) / (x * x - 1.0);
      const double step = p / dp;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const double p1 = std::legendre(n - 1, x);
    const double dp = n * (x * std::legendre(n, x) - p1) / (x * x - 1.0);
    rule.x.push_back(0.5 * (1.0 - x));
    rule.w.push_back(1.0 / ((1.0 - x * x) * dp * dp));
  }
  return rule;
}

double sphere_area(int d) {
  return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
}

// Radial profile of the plane wave averaged over the sphere.
double radial_wave(int d, double kr) {
  switch (d) {
    case 1:
      return std::cos(kr);
    case 2:
      return std::cyl_bessel_j(0.0, kr);
    default:
      return kr < 1e-8 ? 1.0 - kr * kr / 6.0 : std::sin(kr) / kr;
  }
}

double riesz_constant(int d, double sigma) {
  return std::pow(kPi, -0.5 * d) * std::pow(2.0, -sigma) * std::tgamma(0.5 * (d - sigma)) /
         std::tgamma(0.5 * sigma);
}

// pow with 0^0 = 1
double power(double base, double expo) { return expo == 0.0 ? 1.0 : std::pow(base, expo); }

void check_pair(int d, double sigma) {
  if (d < 1 || d > 3) throw PreconditionError("dimension must be 1, 2 or 3");
  if (!(sigma >= 0.0) || sigma > std::min(2.0, static_cast<double>(d)))
    throw PreconditionError("need 0 <= sigma <= min(2, d)");
}

}  // namespace

std::vector<double> radial_mesh(double radius, int base_cells, int level, double grading) {
  if (!(radius > 0.0) || base_cells < 2 || level < 0 || !(grading >= 0.0))
    throw PreconditionError("radial_mesh: bad arguments");
  std::vector<double> r(static_cast<std::size_t>(base_cells) + 1);
  for (int j = 0; j <= base_cells; ++j) {
    const double s = static_cast<double>(j) / base_cells;
    r[static_cast<std::size_t>(j)] =
        grading == 0.0 ? radius * s : radius * std::expm1(grading * s) / std::expm1(grading);
  }
  for (int l = 0; l < level; ++l) {
    std::vector<double> fine;
    fine.reserve(2 * r.size());
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
      fine.push_back(r[i]);
      fine.push_back(0.5 * (r[i] + r[i + 1]));
    }
    fine.push_back(r.back());
    r = std::move(fine);
  }
  return r;
}

RadialQuotient::RadialQuotient(int d, double sigma, std::vector<double> nodes)
    : d_(d), sigma_(sigma), nodes_(std::move(nodes)), sphere_(sphere_area(d)) {
  check_pair(d, sigma);
  if (nodes_.size() < 3 || nodes_.front() != 0.0)
    throw PreconditionError("radial mesh must start at 0 with at least 2 cells");
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
    if (!(nodes_[i + 1] > nodes_[i])) throw PreconditionError("radial mesh must increase");
  kind_ = sigma == 0.0 ? Kind::mass_squared : (sigma == d ? Kind::quartic : Kind::riesz);

  const std::size_t cells = nodes_.size() - 1;
  // 5 points: exact for f^4 r^{d-1} with P1 f, d <= 3
  const GaussRule g5 = gauss_legendre(5);
  tau_ = g5.x;
  wq_.resize(cells * tau_.size());
  for (std::size_t c = 0; c < cells; ++c) {
    const double h = nodes_[c + 1] - nodes_[c];
    for (std::size_t q = 0; q < tau_.size(); ++q) {
      const double r = nodes_[c] + h * tau_[q];
      wq_[c * tau_.size() + q] = sphere_ * g5.w[q] * h * power(r, d - 1.0);
    }
  }

  // tridiagonal K + M over the free nodes
  const std::size_t n = size();
  diag_.assign(n, 0.0);
  off_.assign(n, 0.0);
  for (std::size_t c = 0; c < cells; ++c) {
    const double h = nodes_[c + 1] - nodes_[c];
    double m00 = 0, m01 = 0, m11 = 0, k = 0;
    for (std::size_t q = 0; q < tau_.size(); ++q) {
      const double w = wq_[c * tau_.size() + q];
      const double t = tau_[q];
      m00 += w * (1 - t) * (1 - t);
      m01 += w * (1 - t) * t;
      m11 += w * t * t;
      k += w / (h * h);
    }
    diag_[c] += m00 + k;
    if (c + 1 < n) {
      diag_[c + 1] += m11 + k;
      off_[c] += m01 - k;
    }
  }

  if (kind_ != Kind::riesz) return;
  // Gauss points per cell grow with k_max h so the oscillatory transform
  // stays resolved on coarse cells.
  const double scale = 24.0 / nodes_.back();
  const double kmax = 64.0 * scale;
  std::vector<double> rp, wp;
  std::map<int, GaussRule> rules;
  rcell_.assign(cells + 1, 0);
  for (std::size_t c = 0; c < cells; ++c) {
    const double h = nodes_[c + 1] - nodes_[c];
    const int np = std::clamp(8 + static_cast<int>(std::ceil(0.5 * kmax * h)), 8, 96);
    auto it = rules.find(np);
    if (it == rules.end()) it = rules.emplace(np, gauss_legendre(np)).first;
    for (std::size_t q = 0; q < it->second.x.size(); ++q) {
      const double r = nodes_[c] + h * it->second.x[q];
      rtau_.push_back(it->second.x[q]);
      rp.push_back(r);
      wp.push_back(sphere_ * it->second.w[q] * h * power(r, d - 1.0));
    }
    rcell_[c + 1] = rtau_.size();
  }
  const std::size_t P = rtau_.size();
  const GaussRule g8 = gauss_legendre(8);
  // Fourier nodes in units of 24 / radius: [0, 1] in u = k^sigma, then
  // panels of width 1/2 up to 64.
  std::vector<double> ks, om;
  const GaussRule g24 = gauss_legendre(24);
  for (std::size_t q = 0; q < g24.x.size(); ++q) {
    const double k = std::pow(g24.x[q], 1.0 / sigma);
    ks.push_back(k);
    om.push_back(g24.w[q] / sigma);
  }
  for (int p = 0; p < 126; ++p) {
    const double a = 1.0 + 0.5 * p;
    for (std::size_t q = 0; q < g8.x.size(); ++q) {
      const double k = a + 0.5 * g8.x[q];
      ks.push_back(k);
      om.push_back(0.5 * g8.w[q] * std::pow(k, sigma - 1.0));
    }
  }
  const double c = riesz_constant(d, sigma) * sphere_;
  transform_.resize(static_cast<Eigen::Index>(ks.size()), static_cast<Eigen::Index>(P));
  omega_.resize(static_cast<Eigen::Index>(ks.size()));
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double k = ks[i] * scale;
    // dk k^{sigma-1} in physical units
    omega_[static_cast<Eigen::Index>(i)] = c * om[i] * std::pow(scale, sigma);
    for (std::size_t p = 0; p < P; ++p)
      transform_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
          wp[p] * radial_wave(d, k * rp[p]);
  }
}

RadialQuotient::Parts RadialQuotient::evaluate(std::span<const double> f) const {
  if (f.size() != size()) throw PreconditionError("profile size mismatch");
  Parts parts;
  const std::size_t cells = nodes_.size() - 1;
  const std::size_t nq = tau_.size();
  double mass = 0, dir = 0, quart = 0;
  for (std::size_t c = 0; c < cells; ++c) {
    const double a = f[c];
    const double b = c + 1 < size() ? f[c + 1] : 0.0;
    const double h = nodes_[c + 1] - nodes_[c];
    for (std::size_t q = 0; q < nq; ++q) {
      const double w = wq_[c * nq + q];
      const double v = a + (b - a) * tau_[q];
      mass += w * v * v;
      quart += w * v * v * v * v;
      dir += w * (b - a) * (b - a) / (h * h);
    }
  }
  parts.mass = mass;
  parts.dirichlet = dir;
  switch (kind_) {
    case Kind::mass_squared:
      parts.numerator = mass * mass;
      break;
    case Kind::quartic:
      parts.numerator = quart;
      break;
    case Kind::riesz: {
      Eigen::VectorXd g(static_cast<Eigen::Index>(rtau_.size()));
      for (std::size_t c = 0; c < cells; ++c) {
        const double a = f[c];
        const double b = c + 1 < size() ? f[c + 1] : 0.0;
        for (std::size_t p = rcell_[c]; p < rcell_[c + 1]; ++p) {
          const double v = a + (b - a) * rtau_[p];
          g[static_cast<Eigen::Index>(p)] = v * v;
        }
      }
      const Eigen::VectorXd gh = transform_ * g;
      parts.numerator = gh.dot(omega_.cwiseProduct(gh));
      break;
    }
  }
  parts.quotient =
      parts.numerator / (std::pow(mass, 0.5 * (4.0 - sigma_)) * std::pow(dir, 0.5 * sigma_));
  return parts;
}

double RadialQuotient::log_quotient(std::span<const double> f, std::span<double> grad) const {
  const std::size_t n = size();
  if (f.size() != n || grad.size() != n) throw PreconditionError("profile size mismatch");
  const std::size_t cells = nodes_.size() - 1;
  const std::size_t nq = tau_.size();
  auto value = [&](std::size_t i) { return i < n ? f[i] : 0.0; };

  double mass = 0, dir = 0, quart = 0;
  std::vector<double> gm(n + 1, 0.0), gd(n + 1, 0.0), gq(n + 1, 0.0);
  for (std::size_t c = 0; c < cells; ++c) {
    const double a = value(c), b = value(c + 1);
    const double h = nodes_[c + 1] - nodes_[c];
    for (std::size_t q = 0; q < nq; ++q) {
      const double w = wq_[c * nq + q];
      const double t = tau_[q];
      const double v = a + (b - a) * t;
      const double s = (b - a) / h;
      mass += w * v * v;
      dir += w * s * s;
      gm[c] += 2 * w * v * (1 - t);
      gm[c + 1] += 2 * w * v * t;
      gd[c] -= 2 * w * s / h;
      gd[c + 1] += 2 * w * s / h;
      if (kind_ == Kind::quartic) {
        quart += w * v * v * v * v;
        gq[c] += 4 * w * v * v * v * (1 - t);
        gq[c + 1] += 4 * w * v * v * v * t;
      }
    }
  }
  if (!(mass > 0.0) || !(dir > 0.0)) throw PreconditionError("profile must be nonzero");

  double num = 0.0;
  if (kind_ == Kind::mass_squared) {
    num = mass * mass;
    for (std::size_t i = 0; i <= n; ++i) gq[i] = 2 * mass * gm[i];
  } else if (kind_ == Kind::quartic) {
    num = quart;
  } else {
    Eigen::VectorXd g(static_cast<Eigen::Index>(rtau_.size()));
    for (std::size_t c = 0; c < cells; ++c) {
      const double a = value(c), b = value(c + 1);
      for (std::size_t p = rcell_[c]; p < rcell_[c + 1]; ++p) {
        const double v = a + (b - a) * rtau_[p];
        g[static_cast<Eigen::Index>(p)] = v * v;
      }
    }
    const Eigen::VectorXd gh = transform_ * g;
    const Eigen::VectorXd wgh = omega_.cwiseProduct(gh);
    num = gh.dot(wgh);
    const Eigen::VectorXd dg = 2.0 * (transform_.transpose() * wgh);
    for (std::size_t c = 0; c < cells; ++c) {
      const double a = value(c), b = value(c + 1);
      for (std::size_t p = rcell_[c]; p < rcell_[c + 1]; ++p) {
        const double t = rtau_[p];
        const double v = a + (b - a) * t;
        const double d = dg[static_cast<Eigen::Index>(p)] * 2 * v;
        gq[c] += d * (1 - t);
        gq[c + 1] += d * t;
      }
    }
  }
  if (!(num > 0.0)) throw PreconditionError("numerator vanished");
  const double am = 0.5 * (4.0 - sigma_);
  const double ad = 0.5 * sigma_;
  for (std::size_t i = 0; i < n; ++i)
    grad[i] = gq[i] / num - am * gm[i] / mass - (ad > 0 ? ad * gd[i] / dir : 0.0);
  return std::log(num) - am * std::log(mass) - ad * std::log(dir);
}

void RadialQuotient::precondition(std::span<const double> b, std::span<double> x) const {
  const std::size_t n = size();
  std::vector<double> c(n), y(n);
  double denom = diag_[0];
  c[0] = off_[0] / denom;
  y[0] = b[0] / denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag_[i] - off_[i - 1] * c[i - 1];
    c[i] = off_[i] / denom;
    y[i] = (b[i] - off_[i - 1] * y[i - 1]) / denom;
  }
  x[n - 1] = y[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = y[i] - c[i] * x[i + 1];
}

namespace {

struct AscentResult {
  double logq = 0.0;
  int iterations = 0;
  bool converged = false;
};

// L-BFGS ascent of log Q with the (K + M)^{-1} metric as initial Hessian.
AscentResult ascend(const RadialQuotient& q, std::vector<double>& f, double tol, int max_iter) {
  const std::size_t n = f.size();
  constexpr std::size_t kMemory = 12;
  std::vector<double> g(n), gn(n), dir(n), fn(n);
  double val = q.log_quotient(f, g);
  std::deque<std::vector<double>> S, Y;
  std::deque<double> R;
  int quiet = 0;
  AscentResult out;
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  };
  for (int it = 1; it <= max_iter; ++it) {
    out.iterations = it;
    // two-loop recursion on the ascent direction
    std::vector<double> work = g;
    std::vector<double> alpha(S.size());
    for (std::size_t k = S.size(); k-- > 0;) {
      alpha[k] = R[k] * dot(S[k], work);
      for (std::size_t i = 0; i < n; ++i) work[i] -= alpha[k] * Y[k][i];
    }
    q.precondition(work, dir);
    if (!S.empty()) {
      std::vector<double> py(n);
      q.precondition(Y.back(), py);
      const double gamma = dot(S.back(), Y.back()) / dot(Y.back(), py);
      for (double& v : dir) v *= gamma;
    }
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double beta = R[k] * dot(Y[k], dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] += S[k][i] * (alpha[k] - beta);
    }
    double slope = dot(g, dir);
    if (!(slope > 0.0)) {  // reset to preconditioned gradient
      S.clear();
      Y.clear();
      R.clear();
      q.precondition(g, dir);
      slope = dot(g, dir);
      if (!(slope > 0.0)) {
        out.converged = true;
        break;
      }
    }
    // Armijo backtracking; maximization
    double step = 1.0;
    double vn = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) fn[i] = f[i] + step * dir[i];
      try {
        vn = q.log_quotient(fn, gn);
      } catch (const PreconditionError&) {
        step *= 0.5;
        continue;
      }
      if (std::isfinite(vn) && vn >= val + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      out.converged = true;  // no ascent left at working precision
      break;
    }
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = fn[i] - f[i];
      y[i] = g[i] - gn[i];  // gradient of -log Q
    }
    const double sy = dot(s, y);
    if (sy > 1e-300) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      R.push_back(1.0 / sy);
      if (S.size() > kMemory) {
        S.pop_front();
        Y.pop_front();
        R.pop_front();
      }
    }
    const double change = vn - val;
    f.swap(fn);
    g.swap(gn);
    val = vn;
    quiet = change < tol * (1.0 + std::abs(val)) ? quiet + 1 : 0;
    if (quiet >= 5) {
      out.converged = true;
      break;
    }
  }
  out.logq = val;
  return out;
}

}  // namespace

VariationalConstants optimize_kappa(int d, double sigma, int resolution,
                                    const VariationalOptions& options) {
  check_pair(d, sigma);
  if (resolution < 1) throw PreconditionError("resolution must be >= 1");
  VariationalConstants out;
  out.d = d;
  out.sigma = sigma;
  out.radius = options.radius;
  out.converged = true;

  std::vector<double> prev_nodes;
  std::vector<double> f;
  for (int level = 0; level < resolution; ++level) {
    std::vector<double> nodes =
        radial_mesh(options.radius, options.base_cells, level, options.grading);
    const std::size_t n = nodes.size() - 1;
    if (level == 0) {
      f.resize(n);
      for (std::size_t i = 0; i < n; ++i) f[i] = std::exp(-0.5 * nodes[i] * nodes[i]);
    } else {
      // nested: interpolate exactly onto the bisected mesh
      std::vector<double> fine(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i / 2;
        const double a = f[c];
        const double b = c + 1 < f.size() ? f[c + 1] : 0.0;
        fine[i] = i % 2 == 0 ? a : 0.5 * (a + b);
      }
      f = std::move(fine);
    }
    const RadialQuotient q(d, sigma, nodes);
    const AscentResult res = ascend(q, f, options.tol, options.max_iterations);
    out.levels.push_back(std::exp(res.logq));
    out.iterations.push_back(res.iterations);
    out.converged = out.converged && res.converged;
    prev_nodes = std::move(nodes);
  }
  out.kappa = out.levels.back();
  out.residual = out.levels.size() > 1
                     ? std::abs(out.levels.back() - out.levels[out.levels.size() - 2])
                     : std::numeric_limits<double>::infinity();
  out.M = m_from_kappa(d, sigma, out.kappa);
  out.rho = rho_from_kappa(d, sigma, out.kappa);
  out.relation_residual = relation_residual(d, sigma, out.kappa);
  out.cells = static_cast<int>(prev_nodes.size()) - 1;
  const RadialQuotient q(d, sigma, prev_nodes);
  const double norm = std::sqrt(q.evaluate(f).mass);
  for (double& v : f) v /= norm;
  out.nodes = std::move(prev_nodes);
  out.profile = std::move(f);
  return out;
}

double rho_from_kappa(int d, double sigma, double kappa) {
  (void)d;
  if (!(kappa > 0.0)) throw PreconditionError("kappa must be positive");
  return power((4.0 - sigma) / 4.0, 0.5 * (4.0 - sigma)) * power(0.5 * sigma, 0.5 * sigma) * kappa;
}

double m_from_kappa(int d, double sigma, double kappa) {
  (void)d;
  if (!(kappa > 0.0)) throw PreconditionError("kappa must be positive");
  return (4.0 - sigma) / 4.0 * power(0.5 * sigma, sigma / (4.0 - sigma)) *
         std::pow(kappa, 2.0 / (4.0 - sigma));
}

double relation_residual(int d, double sigma, double kappa) {
  const double rho = rho_from_kappa(d, sigma, kappa);
  return std::abs(rho - std::pow(m_from_kappa(d, sigma, kappa), 2.0 - 0.5 * sigma)) / rho;
}

double intersection_rate(double sigma, double rho) {
  if (!(sigma < 2.0) || sigma < 0.0)
    throw DomainError("intersection rate needs 0 <= sigma < 2 (exponent 2/(2-sigma))");
  if (!(rho > 0.0)) throw PreconditionError("rho must be positive");
  const double a = 2.0 - sigma;
  return std::pow(2.0, 6.0 / a) * a * std::pow(4.0 - sigma, -(4.0 - sigma) / a) *
         std::pow(rho, 2.0 / a);
}

RateConstants rate_constants(int d, double sigma, double nu, double kappa) {
  const bool white3 = d == 3 && sigma == 3.0;
  if (!white3) check_pair(d, sigma);
  if (!(nu > 0.0)) throw PreconditionError("nu must be positive");
  RateConstants out;
  out.d = d;
  out.sigma = sigma;
  out.nu = nu;
  out.rho = rho_from_kappa(d, sigma, kappa);
  out.lifshitz_constant = 1.0 / (2.0 * nu * out.rho);
  out.lifshitz_exponent = 0.5 * (4.0 - sigma);
  if (sigma < 2.0) out.intersection_rate = intersection_rate(sigma, out.rho);
  if (white3) out.constant_3d = -2.0 * std::sqrt(2.0) / (3.0 * std::sqrt(3.0) * kappa);
  return out;
}

void write_constants_csv(std::ostream& out, std::span<const VariationalConstants> rows,
                         double nu) {
  out << "d,sigma,kappa,M,rho,residual,lifshitz_constant,exponent\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    const RateConstants rc = rate_constants(r.d, r.sigma, nu, r.kappa);
    out << r.d << ',' << r.sigma << ',' << r.kappa << ',' << r.M << ',' << r.rho << ','
        << r.residual << ',' << rc.lifshitz_constant << ',' << rc.lifshitz_exponent << '\n';
  }
}

}  // namespace idslab
