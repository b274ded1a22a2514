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

#include "hdtele/optics.hpp"
#include "hdtele/qudit.hpp"
#include "hdtele/reck.hpp"
#include "oracles.hpp"

namespace hdtele {
namespace {

TEST(BeamSplitter, Convention) {
  const Matrix b = beam_splitter(kPi / 4, 0.0).matrix();
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(b(0, 0) - s), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(b(1, 0) - kI * s), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(b(0, 1) - kI * s), 0.0, 1e-15);
}

TEST(Waveplate, QuarterSquaredIsHalf) {
  const Matrix q = waveplate(WaveplateKind::quarter, kPi / 4).matrix();
  const Matrix h = waveplate(WaveplateKind::half, kPi / 4).matrix();
  EXPECT_LT(max_abs_entry(q * q - h), 1e-12);
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  EXPECT_LT(max_abs_entry(h - swap), 1e-12);
  // half-wave plate at 22.5 degrees maps H to diagonal
  const Matrix h22 = waveplate(WaveplateKind::half, kPi / 8).matrix();
  EXPECT_NEAR(std::abs(h22(0, 0)), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(std::abs(h22(1, 0)), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(PolarizingSplitter, ReflectsVerticalFully) {
  const Matrix p = polarizing_splitter(1.0 / 3.0).matrix();
  // modes 1h, 1v, 2h, 2v
  EXPECT_NEAR(std::norm(p(3, 1)), 1.0, 1e-12);
  EXPECT_NEAR(std::norm(p(2, 0)), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(std::norm(p(0, 0)), 2.0 / 3.0, 1e-12);
  EXPECT_THROW(polarizing_splitter(1.5), std::invalid_argument);
}

TEST(QftMultiport, UniformMagnitudes) {
  for (int n = 2; n <= 5; ++n) {
    const Matrix f = qft_multiport(n).matrix();
    EXPECT_LT(max_abs_entry(f - oracle::dft(n)), 1e-12);
  }
  EXPECT_THROW(qft_multiport(1), std::invalid_argument);
}

TEST(ExperimentalMultiport, EquivalentToQftUpToPhases) {
  const auto mp = build_experimental_multiport();
  const Matrix t = mp.logical_transfer();
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(std::norm(t(i, j)), 1.0 / 3.0, 1e-9);
  const auto pe = phase_equivalence(t, qft_multiport(3).matrix(), 1e-9);
  ASSERT_TRUE(pe.has_value());
  EXPECT_LT(pe->residual, 1e-9);
}

TEST(ExperimentalMultiport, SwappedOutputsAreNotEquivalent) {
  Matrix t = build_experimental_multiport().logical_transfer();
  t.row(1).swap(t.row(2));
  EXPECT_FALSE(phase_equivalence(t, qft_multiport(3).matrix(), 1e-9).has_value());
}

TEST(ExperimentalMultiport, OffNominalSplitterBreaksBalance) {
  const Matrix t = build_experimental_multiport(0.36).logical_transfer();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) worst = std::max(worst, std::abs(std::norm(t(i, j)) - 1.0 / 3.0));
  EXPECT_GT(worst, 1e-3);
}

TEST(Embed, PlacesBlock) {
  const Matrix e = embed(beam_splitter(0.4, 0.1).matrix(), {2, 0}, 3);
  EXPECT_TRUE(is_unitary(e));
  EXPECT_NEAR(std::abs(e(1, 1) - 1.0), 0.0, 1e-15);
}

}  // namespace
}  // namespace hdtele
