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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "idslab/common.hpp"
#include "idslab/fields.hpp"

namespace idslab {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// -1/2 Delta_h - (values - c_eps) with Dirichlet boundary, n^2 x n^2,
/// row-major node ordering (GridSpec::index).
SparseMatrix assemble(const GridSpec& grid, const NoiseRealization& noise);

/// Same operator from a potential V (H = -1/2 Delta_h - V).
SparseMatrix assemble_potential(const GridSpec& grid, std::span<const double> potential);

/// y = H x, matrix-free. OpenMP over rows.
void apply_hamiltonian(const GridSpec& grid, std::span<const double> potential,
                       std::span<const double> x, std::span<double> y);
/// Serial reference of apply_hamiltonian.
void apply_hamiltonian_reference(const GridSpec& grid, std::span<const double> potential,
                                 std::span<const double> x, std::span<double> y);

/// All n^2 eigenvalues of -1/2 Delta_h on the grid, ascending:
/// (2/h^2)(sin^2(j pi / 2(n+1)) + sin^2(k pi / 2(n+1))).
std::vector<double> free_spectrum(const GridSpec& grid);

struct SpectrumResult {
  GridSpec grid;
  double eps = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> eigenvalues;  // ascending
  double lambda_max = 0.0;
  /// True when no eigenvalue <= lambda_max is missing: checked with a
  /// Sylvester inertia count of H - lambda_max and by one buffer value above
  /// lambda_max.
  bool complete = false;
  /// max over nodes of the potential; H >= -1/2 Delta_h - v_max.
  double v_max = 0.0;
  std::optional<Eigen::MatrixXd> eigenvectors;  // columns, when requested
  std::string solver;                           // "dense" or "lanczos"
  int iterations = 0;
};

struct EigenRequest {
  std::optional<double> lambda_max;  // all eigenvalues <= lambda_max
  std::optional<int> count;          // or the `count` smallest
  bool vectors = false;
  int dense_limit = 4096;  // dense solve when n^2 <= dense_limit
  int max_restarts = 400;
  double tol = 1e-13;  // relative residual on the shift-inverted Ritz values
};

/// Lowest part of the spectrum of H (assembled from `potential`).
SpectrumResult lowest_eigenvalues(const GridSpec& grid, std::span<const double> potential,
                                  const EigenRequest& request);

/// Convenience over a noise realization; records eps and seed.
SpectrumResult lowest_eigenvalues(const NoiseRealization& noise, const EigenRequest& request);

/// Default cutoff: 4 x the smallest free eigenvalue plus the 99th percentile of |V|.
double default_lambda_max(const GridSpec& grid, std::span<const double> potential);

/// Smallest `count` eigenvalues of a symmetric sparse matrix by shift-invert
/// Lanczos (Krylov-Schur restarts, full reorthogonalization). `shift` must lie
/// strictly below the spectrum. Ritz values are refined by the Rayleigh
/// quotient of H. Columns of `deflate` (orthonormal) are projected out, which
/// is how missed copies of degenerate eigenvalues are recovered.
struct LanczosResult {
  std::vector<double> values;
  Eigen::MatrixXd vectors;
  int restarts = 0;
  int solves = 0;
  bool converged = false;
};
LanczosResult lanczos_smallest(const SparseMatrix& H, int count, double shift, double tol,
                               int max_restarts, std::uint64_t seed = 1,
                               const Eigen::MatrixXd* deflate = nullptr);

/// Number of eigenvalues of H strictly below `lambda`, by the inertia of an
/// LDL^T factorization of H - lambda.
int count_below(const SparseMatrix& H, double lambda);

/// (1/L^2) #{eigenvalues <= lambda}. Throws PreconditionError when lambda
/// exceeds lambda_max, unless the whole spectrum is stored.
double counting_function(const SpectrumResult& spec, double lambda);

struct LaplaceValue {
  double value = 0.0;       // (1/L^2) sum over the computed eigenvalues
  double tail_bound = 0.0;  // (1/L^2) bound on the sum over the rest
  bool certified = false;   // tail_bound <= tol * value
};

/// (1/L^2) sum_n exp(-t lambda_n). Eigenvalues beyond the computed ones are
/// bounded below by both the last computed value and the free spectrum
/// shifted by -v_max, which gives the tail bound.
LaplaceValue laplace_of_counting(const SpectrumResult& spec, double t, double tol = 1e-3);

struct EmpiricalIDS {
  double L = 0.0;
  int n = 0;
  double eps = 0.0;
  int realizations = 0;
  std::vector<double> lambda;
  std::vector<double> mean;       // mean N_L(lambda)
  std::vector<double> std_error;  // across realizations
  std::vector<double> lo;         // bootstrap band
  std::vector<double> hi;
  std::vector<long long> count;   // eigenvalues <= lambda, summed over realizations
  std::vector<std::vector<double>> per_realization;  // [realization][lambda]
};

EmpiricalIDS aggregate_ids(std::span<const SpectrumResult> realizations,
                           std::span<const double> lambda_grid, int resamples = 400,
                           std::uint64_t seed = 0x1d5);

struct LifshitzFit {
  double slope = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
  double curvature = 0.0;  // quadratic coefficient of log N in lambda
  double curvature_error = 0.0;
  bool curved = false;  // |curvature| > 3 curvature_error (or > 1e-8 when exact)
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t points = 0;
  long long min_count = 0;
};

/// Weighted least-squares slope of log N(lambda) against lambda over
/// [lo, hi]. Variances are std_error^2 / N^2; data without errors are fitted
/// by ordinary least squares. Throws when a window point has zero mean or a
/// count below min_count.
LifshitzFit lifshitz_fit(const EmpiricalIDS& ids, double lo, double hi,
                         long long min_count = 30);

/// Fit from raw arrays (synthetic input). `std_error` may be empty.
LifshitzFit lifshitz_fit(std::span<const double> lambda, std::span<const double> n_of_lambda,
                         std::span<const double> std_error);

/// Leftmost window [lambda_i, lambda_{i+width-1}] of the grid in which every
/// point has a pooled count >= min_count. Returns the start index or -1.
int leftmost_window(const EmpiricalIDS& ids, int width, long long min_count = 30);

}  // namespace idslab
