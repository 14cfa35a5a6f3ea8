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

#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace idslab {

/// Nodes 0 = r_0 < ... < r_J = radius. The base mesh is graded,
/// r_j = radius (e^{a j/J} - 1)/(e^a - 1); each level bisects every cell, so
/// the P1 spaces are nested.
std::vector<double> radial_mesh(double radius, int base_cells, int level, double grading = 3.0);

/// Scale-invariant quotient N(f) / (|f|_2^{4-sigma} |grad f|_2^sigma) for a
/// radial P1 profile on R^d with f(radius) = 0. N is
///   sigma = 0:      |f|_2^4
///   0 < sigma < d:  int int f(x)^2 f(y)^2 |x-y|^{-sigma} dx dy
///   sigma = d:      int f^4
/// The Riesz energy is evaluated in Fourier variables,
/// C_{d,sigma} |S^{d-1}| int_0^inf g^(k)^2 k^{sigma-1} dk with g = f^2 and
/// g^ its radial transform; the k grid scales with the mesh, so dilating the
/// mesh leaves the quotient unchanged up to rounding.
class RadialQuotient {
 public:
  RadialQuotient(int d, double sigma, std::vector<double> nodes);

  struct Parts {
    double numerator = 0.0;
    double mass = 0.0;       // |f|_2^2
    double dirichlet = 0.0;  // |grad f|_2^2
    double quotient = 0.0;
  };

  /// f holds the free values f(r_0) .. f(r_{J-1}).
  [[nodiscard]] Parts evaluate(std::span<const double> f) const;
  /// log quotient and its gradient in the free values.
  double log_quotient(std::span<const double> f, std::span<double> grad) const;

  /// Solves (K + M) x = b for the P1 stiffness + mass matrix (tridiagonal).
  void precondition(std::span<const double> b, std::span<double> x) const;

  [[nodiscard]] int dim() const { return d_; }
  [[nodiscard]] double sigma() const { return sigma_; }
  [[nodiscard]] const std::vector<double>& nodes() const { return nodes_; }
  [[nodiscard]] std::size_t size() const { return nodes_.size() - 1; }

 private:
  enum class Kind { mass_squared, riesz, quartic };

  int d_;
  double sigma_;
  Kind kind_;
  std::vector<double> nodes_;
  double sphere_;  // |S^{d-1}|
  // cell quadrature for mass, stiffness and quartic terms
  std::vector<double> tau_;  // reference points in [0,1]
  std::vector<double> wq_;   // weight * r^{d-1} * |S^{d-1}| per cell and point
  // Riesz: g^ = T g at the Fourier nodes, energy = sum_k omega_k g^_k^2
  std::vector<double> rtau_;          // reference points, all cells
  std::vector<std::size_t> rcell_;    // cell c owns rtau_[rcell_[c], rcell_[c+1])
  Eigen::MatrixXd transform_;
  Eigen::VectorXd omega_;
  std::vector<double> diag_, off_;  // K + M
};

struct VariationalOptions {
  double radius = 24.0;
  int base_cells = 40;
  double grading = 3.0;
  double tol = 1e-13;  // relative change of log quotient
  int max_iterations = 20000;
};

struct VariationalConstants {
  int d = 2;
  double sigma = 0.0;
  double kappa = 0.0;
  double M = 0.0;
  double rho = 0.0;
  double residual = 0.0;           // |kappa_finest - kappa_previous|
  double relation_residual = 0.0;  // |rho - M^{2-sigma/2}| / rho
  std::vector<double> levels;      // kappa per refinement level
  std::vector<int> iterations;
  bool converged = false;
  int cells = 0;  // finest level
  double radius = 0.0;
  std::vector<double> nodes;    // finest mesh
  std::vector<double> profile;  // maximizer on the finest mesh, |f|_2 = 1
};

/// Maximizes the quotient over radial P1 profiles on `resolution` nested
/// levels (base_cells * 2^l cells, l < resolution) by preconditioned L-BFGS
/// ascent of the log quotient, warm-starting each level from the previous
/// one. kappa is the finest-level value.
VariationalConstants optimize_kappa(int d, double sigma, int resolution,
                                    const VariationalOptions& options = {});

/// rho = ((4-sigma)/4)^{(4-sigma)/2} (sigma/2)^{sigma/2} kappa, 0^0 = 1.
double rho_from_kappa(int d, double sigma, double kappa);
/// M = ((4-sigma)/4) (sigma/2)^{sigma/(4-sigma)} kappa^{2/(4-sigma)}.
double m_from_kappa(int d, double sigma, double kappa);
/// |rho_from_kappa - m_from_kappa^{2-sigma/2}| / rho_from_kappa.
double relation_residual(int d, double sigma, double kappa);

/// 2^{6/(2-sigma)} (2-sigma) (4-sigma)^{-(4-sigma)/(2-sigma)} rho^{2/(2-sigma)},
/// the rate of log E exp(nu/2 int int |B_s - B_r|^{-sigma}) in t^{(4-sigma)/(2-sigma)}
/// per unit (nu/2)^{2/(2-sigma)}. DomainError for sigma >= 2.
double intersection_rate(double sigma, double rho);

struct RateConstants {
  int d = 2;
  double sigma = 0.0;
  double nu = 1.0;
  double rho = 0.0;
  double lifshitz_constant = 0.0;  // 1/(2 nu rho): log N(lambda) ~ -c (-lambda)^{exponent}
  double lifshitz_exponent = 0.0;  // (4-sigma)/2
  std::optional<double> intersection_rate;  // sigma < 2 only
  std::optional<double> constant_3d;        // d = sigma = 3: -2 sqrt2 / (3 sqrt3 kappa)
};

/// Accepts 0 <= sigma <= min(2, d), or d = sigma = 3 for the 3D white noise.
RateConstants rate_constants(int d, double sigma, double nu, double kappa);

/// CSV with header d,sigma,kappa,M,rho,residual,lifshitz_constant,exponent.
void write_constants_csv(std::ostream& out, std::span<const VariationalConstants> rows,
                         double nu = 1.0);

}  // namespace idslab
