// Copyright 2026 The hdtele Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>

#include <gtest/gtest.h>

#include "hdtele/qudit.hpp"
#include "oracles.hpp"

namespace hdtele {
namespace {

TEST(BellBasis, OrthonormalAndMatchesFormula) {
  for (int d = 2; d <= 4; ++d) {
    Matrix gram(d * d, d * d);
    for (int a = 0; a < d * d; ++a)
      for (int b = 0; b < d * d; ++b)
        gram(a, b) = bell_vector({a / d, a % d}, d).dot(bell_vector({b / d, b % d}, d));
    EXPECT_LT(max_abs_entry(gram - Matrix::Identity(d * d, d * d)), 1e-10);
    for (int m = 0; m < d; ++m)
      for (int n = 0; n < d; ++n) EXPECT_LT((bell_vector({m, n}, d) - oracle::bell(m, n, d)).norm(), 1e-12);
  }
}

TEST(BellBasis, FockRepresentation) {
  const auto s = bell_state({1, 2}, 3);
  EXPECT_NEAR(s.norm_squared(), 1.0, 1e-12);
  EXPECT_EQ(s.terms().size(), 3u);
}

TEST(Mub, TwelveStatesCrossOverlapsOneThird) {
  const auto states = mub_states();
  ASSERT_EQ(states.size(), 12u);
  EXPECT_EQ(states.front().label, "B1_1");
  EXPECT_EQ(states.back().label, "B4_3");
  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t j = 0; j < 12; ++j) {
      const double o = std::norm(states[i].state.amplitudes().dot(states[j].state.amplitudes()));
      if (i == j) {
        EXPECT_NEAR(o, 1.0, 1e-10);
      } else if (i / 3 == j / 3) {
        EXPECT_NEAR(o, 0.0, 1e-10);
      } else {
        EXPECT_NEAR(o, 1.0 / 3.0, 1e-10);
      }
    }
  }
}

TEST(Weyl, ShiftAndClock) {
  const Matrix x = weyl_operator({1, 0}, 3).matrix();
  const Matrix z = weyl_operator({0, 1}, 3).matrix();
  // X|k> = |k+1>, Z|k> = w^k |k>
  EXPECT_NEAR(std::abs(x(1, 0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(z(2, 2) - root_of_unity(3, 2)), 0.0, 1e-15);
  // ZX = w XZ
  EXPECT_LT(max_abs_entry(z * x - root_of_unity(3, 1) * x * z), 1e-12);
}

TEST(QuditState, ValidatesInput) {
  EXPECT_THROW(QuditState::basis(1, 0), std::invalid_argument);
  EXPECT_THROW(QuditState::normalized(Vector::Zero(3)), std::invalid_argument);
  std::mt19937_64 rng(1);
  EXPECT_NEAR(random_qudit(3, rng).amplitudes().norm(), 1.0, 1e-12);
}

}  // namespace
}  // namespace hdtele
