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

// Thin FFTW wrappers shared by the field, spectrum and PAM modules.
// Plans are created once per (kind, shape) under a mutex and executed with the
// new-array interface, which FFTW documents as thread-safe.

#include <complex>
#include <span>
#include <vector>

namespace idslab::spectral {

enum class R2R { dct2, dct3, dst1 };

/// Unnormalized 2D real-to-real transform of an n x n row-major array in place.
///   dct2 then dct3 multiplies by (2n)^2; dst1 applied twice multiplies by (2(n+1))^2.
void r2r_2d(std::span<double> data, int n, R2R kind);

/// Unnormalized complex DFT over a row-major array with the given dims.
void dft(std::span<std::complex<double>> data, std::span<const int> dims, int sign);

}  // namespace idslab::spectral
