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

#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace idslab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Thrown when an operation is called outside its documented preconditions
/// (resolution guards, shape mismatches, malformed regions).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a closed-form quantity is requested outside its domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Uniform lattice of interior nodes of the open box (-L/2, L/2)^2.
/// Node i sits at -L/2 + (i+1) h with h = L/(n+1); the boundary nodes
/// (i = -1 and i = n) carry the Dirichlet condition and are not stored.
struct GridSpec {
  double L = 1.0;
  int n = 1;

  [[nodiscard]] double h() const { return L / static_cast<double>(n + 1); }
  [[nodiscard]] double node(int i) const { return -0.5 * L + (i + 1) * h(); }
  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  }
  [[nodiscard]] std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
           static_cast<std::size_t>(j);
  }

  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

std::string to_string(const GridSpec& grid);

}  // namespace idslab
