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

#include "idslab/fields.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "idslab/rng.hpp"
#include "spectral.hpp"

namespace idslab {

std::vector<double> NoiseRealization::potential() const {
  std::vector<double> v(values.size());
  std::transform(values.begin(), values.end(), v.begin(),
                 [this](double x) { return x - c_eps; });
  return v;
}

double renorm_constant(double eps) {
  if (!(eps > 0.0)) throw DomainError("renorm_constant: eps must be positive");
  return std::log(1.0 / eps) / kTwoPi;
}

void check_mollifier_resolution(const GridSpec& grid, double eps) {
  grid.validate();
  const double h = grid.h();
  if (!(eps >= 4.0 * h * h)) {
    std::ostringstream os;
    os << "mollify: eps=" << eps << " is below the resolution limit 4h^2=" << 4.0 * h * h
       << " for " << to_string(grid) << "; need n >= "
       << static_cast<int>(std::ceil(grid.L / std::sqrt(eps / 4.0))) - 1;
    throw PreconditionError(os.str());
  }
}

std::vector<double> sample_white_noise(const GridSpec& grid, std::uint64_t seed) {
  grid.validate();
  Philox4x32 rng(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0 / grid.h());
  std::vector<double> raw(grid.size());
  for (auto& v : raw) v = normal(rng);
  return raw;
}

NoiseRealization mollify(std::span<const double> raw, const GridSpec& grid, double eps,
                         std::uint64_t seed) {
  check_mollifier_resolution(grid, eps);
  if (raw.size() != grid.size()) throw PreconditionError("mollify: raw field size mismatch");
  const int n = grid.n;
  const double h = grid.h();
  std::vector<double> buf(raw.begin(), raw.end());
  spectral::r2r_2d(buf, n, spectral::R2R::dct2);
  // Cosine modes of the reflecting lattice: cell-centred nodes on a segment of
  // length n h, wavenumber pi m / (n h).
  std::vector<double> damp(static_cast<std::size_t>(n));
  const double ell = n * h;
  for (int m = 0; m < n; ++m) {
    const double k = kPi * m / ell;
    damp[static_cast<std::size_t>(m)] = std::exp(-0.25 * eps * k * k);
  }
  const double norm = 1.0 / (4.0 * n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      buf[grid.index(i, j)] *= damp[static_cast<std::size_t>(i)] *
                               damp[static_cast<std::size_t>(j)] * norm;
    }
  }
  spectral::r2r_2d(buf, n, spectral::R2R::dct3);
  NoiseRealization out;
  out.grid = grid;
  out.eps = eps;
  out.seed = seed;
  out.values = std::move(buf);
  out.c_eps = renorm_constant(eps);
  return out;
}

NoiseRealization sample_noise(const GridSpec& grid, double eps, std::uint64_t seed) {
  check_mollifier_resolution(grid, eps);
  const auto raw = sample_white_noise(grid, seed);
  return mollify(raw, grid, eps, seed);
}

NoiseRealization noise_from_potential(const GridSpec& grid, std::span<const double> potential,
                                      double eps) {
  grid.validate();
  if (potential.size() != grid.size()) throw PreconditionError("noise_from_potential: size mismatch");
  NoiseRealization out;
  out.grid = grid;
  out.eps = eps;
  out.c_eps = renorm_constant(eps);
  out.values.resize(potential.size());
  for (std::size_t k = 0; k < potential.size(); ++k) out.values[k] = potential[k] + out.c_eps;
  return out;
}

// ---------------------------------------------------------------------------
// Riesz-covariance fields

void RieszFieldSpec::validate() const {
  if (d < 1 || d > 3) throw PreconditionError("RieszFieldSpec: d must be 1, 2 or 3");
  if (!(sigma > 0.0) || !(sigma < std::min(2.0, static_cast<double>(d)))) {
    throw PreconditionError("RieszFieldSpec: need 0 < sigma < min(2, d)");
  }
  if (!(nu > 0.0)) throw PreconditionError("RieszFieldSpec: nu must be positive");
  if (!(reg > 0.0)) throw PreconditionError("RieszFieldSpec: reg must be positive");
}

double riesz_covariance(const RieszFieldSpec& spec, double r) {
  if (r >= spec.reg) return spec.nu * std::pow(r, -spec.sigma);
  const double q = r / spec.reg;
  return spec.nu * std::pow(spec.reg, -spec.sigma) * (1.0 + 0.5 * spec.sigma * (1.0 - q * q));
}

namespace {

std::size_t ipow(std::size_t base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

}  // namespace

namespace {

// C_{d,sigma}: (2 pi)^d C |k|^{sigma-d} is the Fourier transform of |x|^{-sigma}.
double riesz_spectral_constant(int d, double sigma) {
  return std::pow(kPi, -0.5 * d) * std::pow(2.0, -sigma) * std::tgamma(0.5 * (d - sigma)) /
         std::tgamma(0.5 * sigma);
}

constexpr double kGaussNode = 0.7745966692414834;  // 3-point Gauss-Legendre on [-1,1]
constexpr std::array<double, 3> kGaussX{-kGaussNode, 0.0, kGaussNode};
constexpr std::array<double, 3> kGaussW{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

// Integral of f over the cube centre + [-half, half]^d, tensor Gauss.
template <class F>
double cube_integral(F&& f, const std::vector<double>& centre, double half) {
  const int d = static_cast<int>(centre.size());
  double acc = 0.0;
  std::vector<double> k(centre.size());
  const std::size_t total = ipow(3, d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      const auto q = rem % 3;
      rem /= 3;
      k[static_cast<std::size_t>(a)] = centre[static_cast<std::size_t>(a)] + half * kGaussX[q];
      w *= kGaussW[q] * half;
    }
    acc += w * f(k);
  }
  return acc;
}

}  // namespace

RieszFieldSampler::RieszFieldSampler(const RieszFieldSpec& spec, int n, double h)
    : spec_(spec), n_(n), h_(h) {
  spec.validate();
  if (n < 2) throw PreconditionError("RieszFieldSampler: need n >= 2");
  if (!(spec.reg >= 2.0 * h)) {
    std::ostringstream os;
    os << "sample_riesz_field: reg=" << spec.reg << " is not resolved by h=" << h
       << " (need reg >= 2h)";
    throw PreconditionError(os.str());
  }
  const int d = spec.d;
  const double sigma = spec.sigma;
  const double reg = spec.reg;
  embed_ = 4 * n;
  const int M = embed_;
  const double dk = kTwoPi / (M * h);
  auto density = [&](const std::vector<double>& k) {
    double k2 = 0.0;
    for (double x : k) k2 += x * x;
    return std::pow(k2, 0.5 * (sigma - d)) * std::exp(-0.125 * k2 * reg * reg);
  };
  const std::size_t total = ipow(static_cast<std::size_t>(M), d);
  sqrt_eigen_.assign(total, 0.0);
  const double amp = spec.nu * riesz_spectral_constant(d, sigma);
  std::vector<double> centre(static_cast<std::size_t>(d));
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    int far = 0;
    for (int a = d - 1; a >= 0; --a) {
      const auto idx = static_cast<int>(rem % static_cast<std::size_t>(M));
      rem /= static_cast<std::size_t>(M);
      const int m = idx <= M / 2 ? idx : idx - M;
      centre[static_cast<std::size_t>(a)] = m * dk;
      far = std::max(far, std::abs(m));
    }
    double weight = 0.0;
    if (far == 0) {
      // The singular cell: its centre subcell carries 3^{-sigma} of the whole
      // by homogeneity, so integrate the ring of 3^d - 1 subcells and resum.
      const double sub = dk / 3.0;
      const std::size_t ring = ipow(3, d);
      std::vector<double> c(static_cast<std::size_t>(d));
      for (std::size_t s = 0; s < ring; ++s) {
        std::size_t r = s;
        bool middle = true;
        for (int a = 0; a < d; ++a) {
          const int off = static_cast<int>(r % 3) - 1;
          r /= 3;
          c[static_cast<std::size_t>(a)] = off * sub;
          middle = middle && off == 0;
        }
        if (!middle) weight += cube_integral(density, c, 0.5 * sub);
      }
      weight /= 1.0 - std::pow(3.0, -sigma);
    } else if (far <= 8) {
      weight = cube_integral(density, centre, 0.5 * dk);
    } else {
      weight = density(centre) * std::pow(dk, d);
    }
    sqrt_eigen_[flat] = std::sqrt(amp * weight);
  }
}

std::pair<std::vector<double>, std::vector<double>> RieszFieldSampler::sample_pair(
    std::uint64_t seed) const {
  const int d = spec_.d;
  const std::size_t total = sqrt_eigen_.size();
  std::vector<std::complex<double>> w(total);
  Philox4x32 rng(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < total; ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    w[k] = sqrt_eigen_[k] * std::complex<double>(re, im);
  }
  const std::vector<int> dims(static_cast<std::size_t>(d), embed_);
  spectral::dft(w, dims, -1);
  const std::size_t out_total = ipow(static_cast<std::size_t>(n_), d);
  std::vector<double> a(out_total);
  std::vector<double> b(out_total);
  for (std::size_t flat = 0; flat < out_total; ++flat) {
    // Row-major index over the n^d lattice mapped into the M^d torus.
    std::size_t rem = flat;
    std::size_t src = 0;
    std::size_t stride = 1;
    std::vector<int> idx(static_cast<std::size_t>(d));
    for (int a_ = d - 1; a_ >= 0; --a_) {
      idx[static_cast<std::size_t>(a_)] = static_cast<int>(rem % static_cast<std::size_t>(n_));
      rem /= static_cast<std::size_t>(n_);
    }
    for (int a_ = d - 1; a_ >= 0; --a_) {
      src += static_cast<std::size_t>(idx[static_cast<std::size_t>(a_)]) * stride;
      stride *= static_cast<std::size_t>(embed_);
    }
    a[flat] = w[src].real();
    b[flat] = w[src].imag();
  }
  return {std::move(a), std::move(b)};
}

std::vector<double> RieszFieldSampler::axis_covariance() const {
  const auto M = static_cast<std::size_t>(embed_);
  const std::size_t total = sqrt_eigen_.size();
  // Cosine sum over modes, lag along the slowest axis: fold the other axes first.
  std::vector<double> marginal(M, 0.0);
  const std::size_t inner = total / M;
  for (std::size_t flat = 0; flat < total; ++flat) {
    marginal[flat / inner] += sqrt_eigen_[flat] * sqrt_eigen_[flat];
  }
  std::vector<double> cov(static_cast<std::size_t>(n_), 0.0);
  for (int j = 0; j < n_; ++j) {
    double acc = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      acc += marginal[m] * std::cos(kTwoPi * static_cast<double>(m * static_cast<std::size_t>(j) % M) /
                                    static_cast<double>(M));
    }
    cov[static_cast<std::size_t>(j)] = acc;
  }
  return cov;
}

std::vector<double> RieszFieldSampler::sample(std::uint64_t seed) const {
  return sample_pair(seed).first;
}

std::vector<double> sample_riesz_field(const RieszFieldSpec& spec, const GridSpec& grid,
                                       std::uint64_t seed) {
  grid.validate();
  const RieszFieldSampler sampler(spec, grid.n, grid.h());
  return sampler.sample(seed);
}

// ---------------------------------------------------------------------------
// Persistence

void write_field(const std::filesystem::path& stem, std::span<const double> values,
                 const GridSpec& grid, double eps, std::uint64_t seed,
                 const std::string& kind) {
  auto bin = stem;
  bin += ".bin";
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw std::runtime_error("write_field: cannot open " + bin.string());
  for (double v : values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    out.write(bytes, 8);
  }
  nlohmann::json side = {{"kind", kind},       {"L", grid.L},
                         {"n", grid.n},        {"h", grid.h()},
                         {"eps", eps},         {"seed", seed},
                         {"count", values.size()}, {"dtype", "float64-le"},
                         {"layout", "row-major"}};
  auto js = stem;
  js += ".json";
  std::ofstream sj(js);
  sj << side.dump(2) << "\n";
}

std::vector<double> read_field(const std::filesystem::path& bin_path) {
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw std::runtime_error("read_field: cannot open " + bin_path.string());
  std::vector<double> values;
  char bytes[8];
  while (in.read(bytes, 8)) {
    std::uint64_t bits;
    std::memcpy(&bits, bytes, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    values.push_back(std::bit_cast<double>(bits));
  }
  return values;
}

}  // namespace idslab
