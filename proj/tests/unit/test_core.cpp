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
#include <set>
#include <vector>

#include "idslab/common.hpp"
#include "idslab/rng.hpp"
#include "idslab/stats.hpp"

using namespace idslab;

TEST_CASE("philox known-answer vectors") {
  using A = std::array<std::uint32_t, 4>;
  CHECK(Philox4x32::block(0, 0, 0) == A{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::block(~0ull, ~0ull, ~0ull) ==
        A{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::block(0x299f31d0a4093822ull, 0x0370734413198a2eull, 0x85a308d3243f6a88ull) ==
        A{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("philox streams are reproducible and distinct") {
  Philox4x32 a(42, 7), b(42, 7), c(42, 8);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
  }
  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 10000; ++i) seeds.insert(derive_seed(1234, i));
  CHECK(seeds.size() == 10000);
}

TEST_CASE("uniform01 moments") {
  Philox4x32 rng(1, 0);
  std::vector<double> u(200000);
  for (auto& v : u) v = uniform01(rng);
  const auto ms = stats::mean_std(u);
  CHECK(ms.mean == doctest::Approx(0.5).epsilon(0.005));
  CHECK(ms.stddev * ms.stddev == doctest::Approx(1.0 / 12).epsilon(0.01));
}

TEST_CASE("grid spec") {
  GridSpec g{1.0, 3};
  CHECK(g.h() == 0.25);
  CHECK(g.node(0) == -0.25);
  CHECK(g.node(2) == 0.25);
  CHECK_THROWS_AS((GridSpec{0.0, 3}).validate(), PreconditionError);
  CHECK_THROWS_AS((GridSpec{1.0, 0}).validate(), PreconditionError);
}

TEST_CASE("weighted polyfit recovers a line exactly") {
  std::vector<double> x{0, 1, 2, 3, 4}, y, v(5, 0.1);
  for (double xi : x) y.push_back(2.0 - 0.5 * xi);
  const auto f = stats::weighted_polyfit(x, y, v, 1);
  CHECK(f.coef[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.coef[1] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(f.chi2 < 1e-20);
}

TEST_CASE("log_sum_exp is overflow safe") {
  std::vector<double> a{1000.0, 1000.0}, w{1.0, 1.0};
  CHECK(stats::log_sum_exp(a, w) == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("ks two-sample: same law passes, shifted law fails") {
  Philox4x32 r1(5, 0), r2(5, 1);
  std::vector<double> a(4000), b(4000), c(4000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = uniform01(r1);
    b[i] = uniform01(r2);
    c[i] = uniform01(r2) + 0.1;
  }
  CHECK(stats::ks_two_sample(a, b).p_value > 0.01);
  CHECK(stats::ks_two_sample(a, c).p_value < 1e-6);
}

TEST_CASE("quantile type 7") {
  CHECK(stats::quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(stats::quantile({1, 2, 3, 4}, 0.0) == 1.0);
  CHECK(stats::quantile({1, 2, 3, 4}, 1.0) == 4.0);
}
