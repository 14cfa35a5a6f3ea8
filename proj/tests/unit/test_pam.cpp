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

#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "idslab/fields.hpp"
#include "idslab/pam.hpp"
#include "idslab/rng.hpp"
#include "idslab/spectrum.hpp"
#include "oracles/spectrum_corpus.hpp"

using namespace idslab;

namespace {

// Continuum Dirichlet heat kernel diagonal p^D_t(x, x) on (-L/2, L/2), generator 1/2 d^2.
double dirichlet_diag_1d(double L, double t, double x) {
  double s = 0.0;
  for (int k = 1; k < 2000; ++k) {
    const double a = k * M_PI / L;
    const double term = std::exp(-0.5 * a * a * t) * std::pow(std::sin(a * (x + 0.5 * L)), 2);
    s += term;
    if (term < 1e-18 && k > 10) break;
  }
  return 2.0 / L * s;
}

}  // namespace

TEST_CASE("evolve: eigenmode decay under zero potential") {
  const GridSpec g{1.5, 20};
  const auto noise = noise_from_potential(g, std::vector<double>(g.size(), 0.0));
  std::vector<double> mode(g.size());
  const double h = g.h();
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) {
      mode[g.index(i, j)] = std::sin(M_PI * (i + 1) / (g.n + 1)) * std::sin(M_PI * (j + 1) / (g.n + 1));
    }
  }
  const double s = std::sin(M_PI / (2.0 * (g.n + 1)));
  const double lam1 = 2.0 * (2.0 / (h * h)) * s * s;
  const double t = 0.7;
  const auto st = evolve(g, noise, InitialDatum::custom(mode), t, 0.013);
  double worst = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) worst = std::max(worst, std::abs(st.u[k] - std::exp(-lam1 * t) * mode[k]));
  CHECK(worst < 1e-12);
}

TEST_CASE("evolve: constant potential multiplies the mass by exp(ct)") {
  const GridSpec g{2.0, 17};
  const double c = 1.7;
  const auto zero = noise_from_potential(g, std::vector<double>(g.size(), 0.0));
  const auto cst = noise_from_potential(g, std::vector<double>(g.size(), c));
  const double t = 0.6;
  const auto a = evolve(g, zero, InitialDatum::delta(5, 9), t, 0.01);
  const auto b = evolve(g, cst, InitialDatum::delta(5, 9), t, 0.01);
  double ma = 0, mb = 0;
  for (double v : a.u) ma += v;
  for (double v : b.u) mb += v;
  CHECK(std::abs(mb / ma - std::exp(c * t)) < 1e-10 * std::exp(c * t));
}

TEST_CASE("evolve: matches the dense matrix exponential") {
  const GridSpec g{1.0, 12};
  const auto noise = sample_noise(g, 0.05, 31);
  const Eigen::MatrixXd H(assemble(g, noise));
  const double t = 0.5;
  const Eigen::MatrixXd E = (-t * H).exp();
  for (const auto& init : {InitialDatum::ones(), InitialDatum::delta(3, 7)}) {
    const auto u0 = init.materialize(g);
    const Eigen::VectorXd want = E * Eigen::Map<const Eigen::VectorXd>(u0.data(), static_cast<Eigen::Index>(u0.size()));
    const auto st = evolve(g, noise, init, t, 1e-3);
    double err = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) err = std::max(err, std::abs(st.u[k] - want[static_cast<Eigen::Index>(k)]));
    CHECK(err < 1e-6);
    CHECK(err < 2e-5 * want.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("evolve: positivity, semigroup property and the step guard") {
  const GridSpec g{2.0, 31};
  const auto noise = sample_noise(g, 0.02, 8);
  const auto st = evolve(g, noise, InitialDatum::delta(4, 27), 0.3, 1e-3);
  CHECK(std::all_of(st.u.begin(), st.u.end(), [](double v) { return v >= 0.0; }));

  const double dt = 1e-3;
  const auto full = evolve(g, noise, InitialDatum::ones(), 0.25, dt);
  const auto first = evolve(g, noise, InitialDatum::ones(), 0.1, dt);
  const auto second = evolve(g, noise, InitialDatum::custom(first.u), 0.15, dt);
  double worst = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    worst = std::max(worst, std::abs(full.u[k] - second.u[k]));
    scale = std::max(scale, std::abs(full.u[k]));
  }
  CHECK(worst < 1e-9 * scale);
  CHECK(full.warning.empty());
  const auto coarse = evolve(g, noise, InitialDatum::ones(), 0.25, 0.05);
  CHECK(coarse.warning.find("bias") != std::string::npos);
  CHECK_THROWS_AS((void)InitialDatum::delta(40, 0).materialize(g), PreconditionError);
}

TEST_CASE("heat_trace: closed form, small-t limit, determinism") {
  const GridSpec g{2.0, 17};
  const auto zero = noise_from_potential(g, std::vector<double>(g.size(), 0.0));
  const double h = g.h();
  for (double t : {0.05, 0.3}) {
    double one = 0.0;
    for (int j = 1; j <= g.n; ++j) {
      const double s = std::sin(j * M_PI / (2.0 * (g.n + 1)));
      one += std::exp(-t * 2.0 / (h * h) * s * s);
    }
    const auto tr = heat_trace(g, zero, t, 64, 1e-3);
    CAPTURE(t);
    CHECK(tr.lo <= one * one);
    CHECK(tr.hi >= one * one);
  }
  const auto noise = sample_noise(g, 0.05, 3);
  const auto tiny = heat_trace(g, noise, 1e-9, 16, 1e-9);
  CHECK(tiny.estimate == doctest::Approx(289.0).epsilon(1e-6));
  const auto a = heat_trace(g, noise, 0.2, 32, 2e-3, 99);
  const auto b = heat_trace_reference(g, noise, 0.2, 32, 2e-3, 99);
  CHECK(a.estimate == b.estimate);
  CHECK(a.std_error == b.std_error);
  CHECK_THROWS_AS(heat_trace(g, noise, 0.2, 8, 2e-3), PreconditionError);
}

TEST_CASE("heat_trace agrees with the spectral sum on the corpus") {
  for (const auto& c : oracle::small_spectrum_corpus()) {
    const auto noise = sample_noise(c.grid, c.eps, c.seed);
    const auto full = lowest_eigenvalues(noise, EigenRequest{.count = static_cast<int>(c.grid.size())});
    const double dt = max_pam_step(c.eps, noise.potential());
    for (double t : {0.1, 0.25}) {
      const double want = laplace_of_counting(full, t).value * c.grid.L * c.grid.L;
      const auto tr = heat_trace(c.grid, noise, t, 32, dt, derive_seed(5, c.seed));
      CAPTURE(c.grid.n);
      CAPTURE(t);
      CHECK(std::abs(tr.estimate - want) <= 0.01 * want + 3.0 * tr.std_error);
    }
  }
}

TEST_CASE("mass duality") {
  {
    const GridSpec g{1.0, 16};
    const auto zero = noise_from_potential(g, std::vector<double>(g.size(), 0.0));
    CHECK(mass_duality_check(g, zero, 3, 11, 0.2, 1e-3).residual <= 1e-10);
  }
  const GridSpec g{2.0, 24};
  const auto noise = sample_noise(g, 0.05, 17);
  const double dt = max_pam_step(0.05, noise.potential());
  const auto md = mass_duality_check(g, noise, 7, 12, 0.5, dt);
  CHECK(md.residual <= 1e-8);
  CHECK(md.delta_mass > 0.0);

  // Nested boxes share the noise: L-box mass <= 2L-box mass.
  const int n = 15;
  const GridSpec small{1.5, n};
  const GridSpec big{3.0, 2 * n + 1};
  const int off = (n + 1) / 2;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto nb = sample_noise(big, 0.05, seed);
    const auto vb = nb.potential();
    std::vector<double> vs(small.size());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) vs[small.index(i, j)] = vb[big.index(i + off, j + off)];
    }
    const auto ns = noise_from_potential(small, vs, 0.05);
    const double step = max_pam_step(0.05, vb);
    const auto us = evolve(small, ns, InitialDatum::delta(7, 7), 0.5, step);
    const auto ub = evolve(big, nb, InitialDatum::delta(7 + off, 7 + off), 0.5, step);
    double ms = 0, mb = 0;
    for (double v : us.u) ms += v;
    for (double v : ub.u) mb += v;
    CAPTURE(seed);
    CHECK(ms <= mb);
  }
}

TEST_CASE("interpolate is exact on bilinear data and clamps near the wall") {
  const GridSpec g{2.0, 9};
  std::vector<double> f(g.size());
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) f[g.index(i, j)] = 1.0 + 2.0 * g.node(i) - 0.5 * g.node(j) + 0.25 * g.node(i) * g.node(j);
  }
  for (double x : {-0.63, 0.0, 0.41}) {
    for (double y : {-0.2, 0.77}) {
      CHECK(interpolate(g, f, x, y) == doctest::Approx(1.0 + 2.0 * x - 0.5 * y + 0.25 * x * y).epsilon(1e-13));
    }
  }
  CHECK(interpolate(g, f, -0.99, -0.99) == doctest::Approx(f[g.index(0, 0)]));
}

TEST_CASE("Feynman-Kac: zero potential reproduces the Dirichlet heat kernel diagonal") {
  const GridSpec g{1.0, 15};
  const auto zero = noise_from_potential(g, std::vector<double>(g.size(), 0.0), 0.05);
  const double t = 0.05, x0 = 0.2, y0 = -0.1;
  const auto fk = feynman_kac_estimate(zero, t, x0, y0, 40000, 12);
  const double want = dirichlet_diag_1d(1.0, t, x0) * dirichlet_diag_1d(1.0, t, y0);
  CAPTURE(fk.estimate);
  CAPTURE(fk.std_error);
  CHECK(std::abs(fk.estimate - want) < 3.0 * fk.std_error);
  CHECK(fk.survival < 1.0);

  const double c = 0.8;
  const auto cst = noise_from_potential(g, std::vector<double>(g.size(), c), 0.05);
  const auto fc = feynman_kac_estimate(cst, t, x0, y0, 40000, 12);
  CHECK(fc.estimate == doctest::Approx(fk.estimate * std::exp(c * t)).epsilon(1e-12));
}

TEST_CASE("Feynman-Kac agrees with the PDE solution at the start point") {
  const GridSpec g{4.0, 35};
  const auto noise = sample_noise(g, 0.05, 23);
  const double t = 0.25;
  const int c = 17;  // node at the origin
  REQUIRE(std::abs(g.node(c)) < 1e-12);
  const auto st = evolve(g, noise, InitialDatum::delta(c, c), t, max_pam_step(0.05, noise.potential()));
  const double pde = st.u[g.index(c, c)];
  const auto fk = feynman_kac_estimate(noise, t, 0.0, 0.0, 20000, 4);
  CAPTURE(pde);
  CAPTURE(fk.estimate);
  CAPTURE(fk.std_error);
  CHECK(std::abs(fk.estimate - pde) <= 3.0 * fk.std_error + 0.05 * pde);
}

TEST_CASE("annealed moment: the two normalizations differ by the analytic gap") {
  const double eps_list[] = {0.02, 0.01};
  const auto am = annealed_moment(0.1, eps_list, 4000, 77);
  REQUIRE(am.size() == 2);
  for (const auto& a : am) {
    CHECK(a.log_form1 - a.log_form2 == doctest::Approx(a.log_gap).epsilon(1e-10));
    CHECK(a.lo <= a.form1);
    CHECK(a.hi >= a.form1);
    CHECK_FALSE(a.overflow);
  }
  // t well inside the finite-moment range: eps-halving moves the estimate
  // by well under a percent.
  CHECK(std::abs(am[1].form1 / am[0].form1 - 1.0) < 0.01);
  CHECK(am[0].n_t == required_steps(1.0, 0.01 / 0.1));
}
