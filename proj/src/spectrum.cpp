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

#include "idslab/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "idslab/rng.hpp"
#include "idslab/stats.hpp"

namespace idslab {

SparseMatrix assemble_potential(const GridSpec& grid, std::span<const double> potential) {
  grid.validate();
  if (potential.size() != grid.size()) {
    std::ostringstream os;
    os << "assemble: potential has " << potential.size() << " values, grid " << to_string(grid)
       << " needs " << grid.size();
    throw PreconditionError(os.str());
  }
  const int n = grid.n;
  const double h = grid.h();
  const double off = -0.5 / (h * h);
  const double diag = 2.0 / (h * h);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(grid.size() * 5);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto r = static_cast<int>(grid.index(i, j));
      trip.emplace_back(r, r, diag - potential[static_cast<std::size_t>(r)]);
      if (i > 0) trip.emplace_back(r, static_cast<int>(grid.index(i - 1, j)), off);
      if (i + 1 < n) trip.emplace_back(r, static_cast<int>(grid.index(i + 1, j)), off);
      if (j > 0) trip.emplace_back(r, r - 1, off);
      if (j + 1 < n) trip.emplace_back(r, r + 1, off);
    }
  }
  const auto N = static_cast<Eigen::Index>(grid.size());
  SparseMatrix H(N, N);
  H.setFromTriplets(trip.begin(), trip.end());
  H.makeCompressed();
  return H;
}

SparseMatrix assemble(const GridSpec& grid, const NoiseRealization& noise) {
  if (!(noise.grid == grid)) {
    throw PreconditionError("assemble: noise grid " + to_string(noise.grid) +
                            " does not match " + to_string(grid));
  }
  const auto v = noise.potential();
  return assemble_potential(grid, v);
}

namespace {

inline double apply_row(int n, double off, double diag, std::span<const double> potential,
                        std::span<const double> x, int i, int j) {
  const auto r = static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                 static_cast<std::size_t>(j);
  double acc = (diag - potential[r]) * x[r];
  double nb = 0.0;
  if (i > 0) nb += x[r - static_cast<std::size_t>(n)];
  if (i + 1 < n) nb += x[r + static_cast<std::size_t>(n)];
  if (j > 0) nb += x[r - 1];
  if (j + 1 < n) nb += x[r + 1];
  return acc + off * nb;
}

void check_apply(const GridSpec& grid, std::span<const double> potential,
                 std::span<const double> x, std::span<double> y) {
  if (potential.size() != grid.size() || x.size() != grid.size() || y.size() != grid.size()) {
    throw PreconditionError("apply_hamiltonian: size mismatch");
  }
}

}  // namespace

void apply_hamiltonian(const GridSpec& grid, std::span<const double> potential,
                       std::span<const double> x, std::span<double> y) {
  check_apply(grid, potential, x, y);
  const int n = grid.n;
  const double h = grid.h();
  const double off = -0.5 / (h * h);
  const double diag = 2.0 / (h * h);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      y[grid.index(i, j)] = apply_row(n, off, diag, potential, x, i, j);
    }
  }
}

void apply_hamiltonian_reference(const GridSpec& grid, std::span<const double> potential,
                                 std::span<const double> x, std::span<double> y) {
  check_apply(grid, potential, x, y);
  const int n = grid.n;
  const double h = grid.h();
  const double off = -0.5 / (h * h);
  const double diag = 2.0 / (h * h);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) y[grid.index(i, j)] = apply_row(n, off, diag, potential, x, i, j);
  }
}

std::vector<double> free_spectrum(const GridSpec& grid) {
  grid.validate();
  const int n = grid.n;
  const double h = grid.h();
  std::vector<double> one(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) {
    const double s = std::sin(j * kPi / (2.0 * (n + 1)));
    one[static_cast<std::size_t>(j - 1)] = 2.0 / (h * h) * s * s;
  }
  std::vector<double> all;
  all.reserve(grid.size());
  for (double a : one) {
    for (double b : one) all.push_back(a + b);
  }
  std::sort(all.begin(), all.end());
  return all;
}

int count_below(const SparseMatrix& H, double lambda) {
  SparseMatrix A = H;
  for (Eigen::Index k = 0; k < A.rows(); ++k) A.coeffRef(k, k) -= lambda;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
  if (ldlt.info() != Eigen::Success) {
    throw std::runtime_error("count_below: LDL^T factorization failed (lambda on the spectrum?)");
  }
  const auto& D = ldlt.vectorD();
  int neg = 0;
  for (Eigen::Index k = 0; k < D.size(); ++k) {
    if (D[k] == 0.0) throw std::runtime_error("count_below: zero pivot");
    if (D[k] < 0.0) ++neg;
  }
  return neg;
}

LanczosResult lanczos_smallest(const SparseMatrix& H, int count, double shift, double tol,
                               int max_restarts, std::uint64_t seed,
                               const Eigen::MatrixXd* deflate) {
  const Eigen::Index N = H.rows();
  const Eigen::Index free_dim = N - (deflate != nullptr ? deflate->cols() : 0);
  if (count < 1 || count > free_dim) throw PreconditionError("lanczos_smallest: bad count");
  SparseMatrix A = H;
  for (Eigen::Index k = 0; k < N; ++k) A.coeffRef(k, k) -= shift;
  Eigen::SimplicialLDLT<SparseMatrix> solver(A);
  if (solver.info() != Eigen::Success) throw std::runtime_error("lanczos_smallest: factorization failed");
  if ((solver.vectorD().array() <= 0.0).any()) {
    throw PreconditionError("lanczos_smallest: shift is not below the spectrum");
  }

  const Eigen::Index m = std::min<Eigen::Index>(free_dim, std::max<Eigen::Index>(2 * count + 20, count + 30));
  const Eigen::Index keep = std::min<Eigen::Index>(m - 1, count + (m - count) / 2);

  auto project = [&](Eigen::VectorXd& w) {
    if (deflate != nullptr && deflate->cols() > 0) {
      for (int pass = 0; pass < 2; ++pass) w -= *deflate * (deflate->transpose() * w);
    }
  };

  Eigen::MatrixXd V(N, m + 1);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  Philox4x32 rng(seed, 0);
  std::normal_distribution<double> normal;
  auto random_unit = [&](Eigen::Index cols) {
    Eigen::VectorXd v(N);
    for (Eigen::Index k = 0; k < N; ++k) v[k] = normal(rng);
    project(v);
    for (int pass = 0; pass < 2; ++pass) {
      if (cols > 0) v -= V.leftCols(cols) * (V.leftCols(cols).transpose() * v);
    }
    return Eigen::VectorXd(v / v.norm());
  };
  V.col(0) = random_unit(0);

  LanczosResult out;
  Eigen::Index start = 0;
  double beta = 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  for (int restart = 0; restart <= max_restarts; ++restart) {
    for (Eigen::Index j = start; j < m; ++j) {
      Eigen::VectorXd w = solver.solve(V.col(j));
      ++out.solves;
      project(w);
      // Classical Gram-Schmidt, twice.
      Eigen::VectorXd coef = V.leftCols(j + 1).transpose() * w;
      w -= V.leftCols(j + 1) * coef;
      const Eigen::VectorXd again = V.leftCols(j + 1).transpose() * w;
      w -= V.leftCols(j + 1) * again;
      coef += again;
      for (Eigen::Index i = 0; i <= j; ++i) {
        T(i, j) = coef[i];
        T(j, i) = coef[i];
      }
      beta = w.norm();
      if (beta < 1e-14 * std::abs(coef[j]) && j + 1 < free_dim) {
        // Invariant subspace: continue with a fresh direction, decoupled.
        V.col(j + 1) = random_unit(j + 1);
        beta = 0.0;
      } else {
        V.col(j + 1) = w / beta;
      }
      if (j + 1 < m) {
        T(j + 1, j) = beta;
        T(j, j + 1) = beta;
      }
    }
    es.compute(T);
    // Largest theta first.
    const Eigen::VectorXd theta = es.eigenvalues().reverse();
    const Eigen::MatrixXd Y = es.eigenvectors().rowwise().reverse();
    int converged = 0;
    for (int i = 0; i < count; ++i) {
      const double res = std::abs(beta * Y(m - 1, i));
      if (res <= tol * std::abs(theta[i])) ++converged;
      else break;
    }
    out.restarts = restart;
    if (converged >= count || m == free_dim) {
      const Eigen::MatrixXd X = V.leftCols(m) * Y.leftCols(count);
      out.values.resize(static_cast<std::size_t>(count));
      out.vectors = X;
      for (int i = 0; i < count; ++i) {
        Eigen::VectorXd x = X.col(i);
        x.normalize();
        out.vectors.col(i) = x;
        out.values[static_cast<std::size_t>(i)] = x.dot(H * x);
      }
      // Sort ascending (Rayleigh refinement can swap near-ties).
      std::vector<int> order(static_cast<std::size_t>(count));
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return out.values[static_cast<std::size_t>(a)] < out.values[static_cast<std::size_t>(b)];
      });
      std::vector<double> vals(order.size());
      Eigen::MatrixXd vecs(N, count);
      for (int i = 0; i < count; ++i) {
        vals[static_cast<std::size_t>(i)] = out.values[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
        vecs.col(i) = out.vectors.col(order[static_cast<std::size_t>(i)]);
      }
      out.values = std::move(vals);
      out.vectors = std::move(vecs);
      out.converged = converged >= count;
      return out;
    }
    // Krylov-Schur restart: keep the leading `keep` Ritz vectors.
    const Eigen::MatrixXd Vk = V.leftCols(m) * Y.leftCols(keep);
    V.leftCols(keep) = Vk;
    V.col(keep) = V.col(m);
    T.setZero();
    for (Eigen::Index i = 0; i < keep; ++i) {
      T(i, i) = theta[i];
      T(i, keep) = beta * Y(m - 1, i);
      T(keep, i) = T(i, keep);
    }
    start = keep;
  }
  out.converged = false;
  return out;
}

double default_lambda_max(const GridSpec& grid, std::span<const double> potential) {
  const double mu1 = free_spectrum(grid).front();
  std::vector<double> a(potential.begin(), potential.end());
  for (auto& v : a) v = std::abs(v);
  return 4.0 * mu1 + stats::quantile(std::move(a), 0.99);
}

SpectrumResult lowest_eigenvalues(const GridSpec& grid, std::span<const double> potential,
                                  const EigenRequest& request) {
  if (request.lambda_max.has_value() == request.count.has_value()) {
    throw PreconditionError("lowest_eigenvalues: give exactly one of lambda_max or count");
  }
  const SparseMatrix H = assemble_potential(grid, potential);
  const auto N = static_cast<int>(grid.size());
  SpectrumResult res;
  res.grid = grid;
  res.v_max = *std::max_element(potential.begin(), potential.end());

  if (N <= request.dense_limit) {
    res.solver = "dense";
    const Eigen::MatrixXd D(H);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        D, request.vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("lowest_eigenvalues: dense solve failed");
    const Eigen::VectorXd& ev = es.eigenvalues();
    int keep = 0;
    if (request.lambda_max) {
      res.lambda_max = *request.lambda_max;
      while (keep < N && ev[keep] <= res.lambda_max) ++keep;
    } else {
      keep = std::min(*request.count, N);
      res.lambda_max = ev[keep - 1];
    }
    res.eigenvalues.assign(ev.data(), ev.data() + keep);
    if (request.vectors) res.eigenvectors = es.eigenvectors().leftCols(keep);
    res.complete = true;
    return res;
  }

  res.solver = "lanczos";
  const double shift = free_spectrum(grid).front() - res.v_max - 1.0;
  int target = 0;
  if (request.lambda_max) {
    res.lambda_max = *request.lambda_max;
    target = count_below(H, res.lambda_max);
  } else {
    target = std::min(*request.count, N);
  }
  // One buffer value above the wanted set.
  const int want = std::min(target + 1, N);
  Eigen::MatrixXd basis(H.rows(), 0);
  std::vector<double> values;
  bool ok = true;
  int goal = want;
  for (int round = 0; round < 8; ++round) {
    const int need = goal - static_cast<int>(values.size());
    if (need > 0) {
      const auto lr = lanczos_smallest(H, need, shift, request.tol, request.max_restarts,
                                       1 + static_cast<std::uint64_t>(round),
                                       basis.cols() > 0 ? &basis : nullptr);
      res.iterations += lr.solves;
      ok = ok && lr.converged;
      std::vector<double> merged_vals = values;
      merged_vals.insert(merged_vals.end(), lr.values.begin(), lr.values.end());
      Eigen::MatrixXd merged(H.rows(), basis.cols() + lr.vectors.cols());
      merged << basis, lr.vectors;
      std::vector<int> order(merged_vals.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int x, int y) {
        return merged_vals[static_cast<std::size_t>(x)] < merged_vals[static_cast<std::size_t>(y)];
      });
      values.resize(order.size());
      basis.resize(H.rows(), static_cast<Eigen::Index>(order.size()));
      for (std::size_t i = 0; i < order.size(); ++i) {
        values[i] = merged_vals[static_cast<std::size_t>(order[i])];
        basis.col(static_cast<Eigen::Index>(i)) = merged.col(order[i]);
      }
    }
    // A missed copy of a degenerate eigenvalue shows up as an inertia count
    // above the number of values found so far.
    const double top = values.back();
    const int below = count_below(H, top + 1e-9 * std::max(1.0, std::abs(top)));
    if (below <= static_cast<int>(values.size())) break;
    goal = std::min(below, N);
  }
  if (request.lambda_max) {
    int keep = 0;
    while (keep < static_cast<int>(values.size()) && values[static_cast<std::size_t>(keep)] <= res.lambda_max) ++keep;
    const bool buffer_above = want == target ||
                              (static_cast<int>(values.size()) > keep && values[static_cast<std::size_t>(keep)] > res.lambda_max);
    res.complete = ok && keep == target && buffer_above;
    res.eigenvalues.assign(values.begin(), values.begin() + keep);
    if (request.vectors) res.eigenvectors = basis.leftCols(keep);
  } else {
    const int keep = std::min<int>(target, static_cast<int>(values.size()));
    res.eigenvalues.assign(values.begin(), values.begin() + keep);
    res.lambda_max = res.eigenvalues.back();
    const double probe = res.lambda_max + 1e-9 * std::max(1.0, std::abs(res.lambda_max));
    res.complete = ok && count_below(H, probe) == keep;
    if (request.vectors) res.eigenvectors = basis.leftCols(keep);
  }
  return res;
}

SpectrumResult lowest_eigenvalues(const NoiseRealization& noise, const EigenRequest& request) {
  const auto v = noise.potential();
  auto res = lowest_eigenvalues(noise.grid, v, request);
  res.eps = noise.eps;
  res.seed = noise.seed;
  return res;
}

double counting_function(const SpectrumResult& spec, double lambda) {
  const bool whole = spec.eigenvalues.size() == spec.grid.size();
  if (!whole && lambda > spec.lambda_max) {
    std::ostringstream os;
    os << "counting_function: lambda=" << lambda << " exceeds lambda_max=" << spec.lambda_max
       << " (count not certified)";
    throw PreconditionError(os.str());
  }
  if (!whole && !spec.complete) {
    throw PreconditionError("counting_function: spectrum is not certified complete");
  }
  const auto it = std::upper_bound(spec.eigenvalues.begin(), spec.eigenvalues.end(), lambda);
  const double L = spec.grid.L;
  return static_cast<double>(it - spec.eigenvalues.begin()) / (L * L);
}

LaplaceValue laplace_of_counting(const SpectrumResult& spec, double t, double tol) {
  if (!(t > 0.0)) throw PreconditionError("laplace_of_counting: t must be positive");
  const double L2 = spec.grid.L * spec.grid.L;
  LaplaceValue out;
  double sum = 0.0;
  for (double lam : spec.eigenvalues) sum += std::exp(-t * lam);
  out.value = sum / L2;
  const std::size_t K = spec.eigenvalues.size();
  if (K < spec.grid.size()) {
    const auto mu = free_spectrum(spec.grid);
    double floor = spec.eigenvalues.empty() ? -std::numeric_limits<double>::infinity()
                                            : spec.eigenvalues.back();
    if (spec.complete) floor = std::max(floor, spec.lambda_max);
    double tail = 0.0;
    for (std::size_t k = K; k < mu.size(); ++k) {
      tail += std::exp(-t * std::max(floor, mu[k] - spec.v_max));
    }
    out.tail_bound = tail / L2;
  }
  out.certified = out.tail_bound <= tol * out.value;
  return out;
}

EmpiricalIDS aggregate_ids(std::span<const SpectrumResult> realizations,
                           std::span<const double> lambda_grid, int resamples,
                           std::uint64_t seed) {
  if (realizations.empty()) throw PreconditionError("aggregate_ids: no realizations");
  const auto& first = realizations.front();
  for (const auto& r : realizations) {
    if (!(r.grid == first.grid) || r.eps != first.eps) {
      throw PreconditionError("aggregate_ids: realizations differ in (L, n, eps)");
    }
  }
  if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end())) {
    throw PreconditionError("aggregate_ids: lambda grid must be ascending");
  }
  EmpiricalIDS ids;
  ids.L = first.grid.L;
  ids.n = first.grid.n;
  ids.eps = first.eps;
  ids.realizations = static_cast<int>(realizations.size());
  ids.lambda.assign(lambda_grid.begin(), lambda_grid.end());
  const std::size_t G = lambda_grid.size();
  ids.per_realization.assign(realizations.size(), std::vector<double>(G));
  ids.count.assign(G, 0);
  const double L2 = ids.L * ids.L;
  for (std::size_t r = 0; r < realizations.size(); ++r) {
    for (std::size_t g = 0; g < G; ++g) {
      const double v = counting_function(realizations[r], lambda_grid[g]);
      ids.per_realization[r][g] = v;
      ids.count[g] += std::llround(v * L2);
    }
  }
  ids.mean.resize(G);
  ids.std_error.resize(G);
  ids.lo.resize(G);
  ids.hi.resize(G);
  std::vector<double> column(realizations.size());
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t r = 0; r < realizations.size(); ++r) column[r] = ids.per_realization[r][g];
    const auto ms = stats::mean_std(column);
    ids.mean[g] = ms.mean;
    ids.std_error[g] = column.size() > 1 ? ms.std_error : 0.0;
    const auto band = stats::bootstrap_mean_interval(column, resamples, 0.95, seed);
    ids.lo[g] = band.lo;
    ids.hi[g] = band.hi;
  }
  return ids;
}

namespace {

LifshitzFit fit_log(std::span<const double> x, std::span<const double> logy,
                    std::span<const double> var) {
  LifshitzFit fit;
  fit.points = x.size();
  if (x.size() < 2) throw PreconditionError("lifshitz_fit: need at least two points in the window");
  const bool weighted = !var.empty();
  const auto lin = weighted ? stats::weighted_polyfit(x, logy, var, 1) : stats::ols_polyfit(x, logy, 1);
  fit.intercept = lin.coef[0];
  fit.slope = lin.coef[1];
  fit.std_error = lin.std_error[1];
  fit.window_lo = x.front();
  fit.window_hi = x.back();
  if (x.size() >= 4) {
    const auto quad = weighted ? stats::weighted_polyfit(x, logy, var, 2) : stats::ols_polyfit(x, logy, 2);
    fit.curvature = quad.coef[2];
    fit.curvature_error = quad.std_error[2];
    const double width = x.back() - x.front();
    const double floor = 1e-8 * (1.0 + std::abs(fit.slope)) / std::max(width, 1e-300);
    fit.curved = std::abs(fit.curvature) > 3.0 * fit.curvature_error &&
                 std::abs(fit.curvature) > floor;
  }
  return fit;
}

}  // namespace

LifshitzFit lifshitz_fit(const EmpiricalIDS& ids, double lo, double hi, long long min_count) {
  std::vector<double> x, logy, var;
  long long least = std::numeric_limits<long long>::max();
  bool exact = ids.realizations < 2;
  for (std::size_t g = 0; g < ids.lambda.size(); ++g) {
    if (ids.lambda[g] < lo || ids.lambda[g] > hi) continue;
    if (!(ids.mean[g] > 0.0) || ids.count[g] < min_count) {
      std::ostringstream os;
      os << "lifshitz_fit: lambda=" << ids.lambda[g] << " has " << ids.count[g]
         << " counts (need >= " << min_count << ")";
      throw PreconditionError(os.str());
    }
    least = std::min(least, ids.count[g]);
    x.push_back(ids.lambda[g]);
    logy.push_back(std::log(ids.mean[g]));
    const double rel = ids.std_error[g] / ids.mean[g];
    if (!(rel > 0.0)) exact = true;
    var.push_back(rel * rel);
  }
  if (x.empty()) throw PreconditionError("lifshitz_fit: empty window");
  auto fit = fit_log(x, logy, exact ? std::span<const double>{} : std::span<const double>(var));
  fit.min_count = least;
  return fit;
}

LifshitzFit lifshitz_fit(std::span<const double> lambda, std::span<const double> n_of_lambda,
                         std::span<const double> std_error) {
  if (lambda.size() != n_of_lambda.size()) throw PreconditionError("lifshitz_fit: size mismatch");
  std::vector<double> logy(lambda.size());
  std::vector<double> var;
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    if (!(n_of_lambda[k] > 0.0)) throw PreconditionError("lifshitz_fit: N must be positive");
    logy[k] = std::log(n_of_lambda[k]);
  }
  if (!std_error.empty()) {
    var.resize(lambda.size());
    for (std::size_t k = 0; k < lambda.size(); ++k) {
      const double rel = std_error[k] / n_of_lambda[k];
      var[k] = rel * rel;
    }
  }
  return fit_log(lambda, logy, var);
}

int leftmost_window(const EmpiricalIDS& ids, int width, long long min_count) {
  const auto G = static_cast<int>(ids.lambda.size());
  for (int s = 0; s + width <= G; ++s) {
    bool ok = true;
    for (int g = s; g < s + width && ok; ++g) ok = ids.count[static_cast<std::size_t>(g)] >= min_count;
    if (ok) return s;
  }
  return -1;
}

}  // namespace idslab
