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

#include "hdtele/fock.hpp"
#include "hdtele/optics.hpp"
#include "oracles.hpp"

namespace hdtele {
namespace {

RegisterPtr line_register(int n) {
  std::vector<ModeLabel> labels;
  for (int k = 0; k < n; ++k) labels.push_back({"m", k, 0});
  return make_register(labels);
}

TEST(ModeRegister, RejectsDuplicatesAndUnknownLabels) {
  EXPECT_THROW(make_register({{"a", 0, 0}, {"a", 0, 0}}), std::invalid_argument);
  const auto reg = make_register({{"a", 0, 0}, {"a", 1, 0}});
  EXPECT_EQ(reg->index_of({"a", 1, 0}), 1u);
  EXPECT_THROW(reg->index_of({"b", 0, 0}), std::out_of_range);
  EXPECT_THROW(make_register({{"a", -1, 0}}), std::invalid_argument);
}

TEST(FockState, VacuumAndBasisStates) {
  const auto reg = line_register(3);
  const auto vac = FockState::vacuum(reg);
  EXPECT_EQ(vac.terms().size(), 1u);
  EXPECT_DOUBLE_EQ(vac.norm_squared(), 1.0);
  const auto s = make_fock(reg, {{{"m", 0, 0}, 2}, {{"m", 2, 0}, 1}});
  EXPECT_EQ(s.max_photons(), 3);
  EXPECT_EQ(s.amplitude({2, 0, 1}), cplx(1.0));
  EXPECT_THROW(make_fock(reg, {{{"m", 0, 0}, 7}}), std::invalid_argument);
  EXPECT_THROW(make_fock(reg, {{{"z", 0, 0}, 1}}), std::out_of_range);
}

TEST(FockState, CreationUsesBosonicFactor) {
  const auto reg = line_register(1);
  auto s = FockState::vacuum(reg);
  s = create_photon(s, {{0, 1.0}});
  s = create_photon(s, {{0, 1.0}});
  // (a^dag)^2 |0> = sqrt(2) |2>
  EXPECT_NEAR(std::abs(s.amplitude({2}) - std::sqrt(2.0)), 0.0, 1e-15);
}

TEST(FockState, CutoffIsEnforced) {
  const auto reg = line_register(2);
  auto s = make_fock(reg, {{{"m", 0, 0}, 6}});
  EXPECT_THROW(create_photon(s, {{1, 1.0}}), std::invalid_argument);
  EXPECT_THROW(FockState(reg, {{Occupation{1}, 1.0}}, false), std::invalid_argument);
  EXPECT_THROW(FockState(reg, {{Occupation{1, 0}, 2.0}}, true), InvariantViolation);
}

TEST(Superpose, RejectsRegisterMismatch) {
  const auto a = FockState::vacuum(line_register(2));
  const auto b = FockState::vacuum(make_register({{"q", 0, 0}, {"q", 1, 0}}));
  EXPECT_THROW(superpose({{1.0, a}, {1.0, b}}), std::invalid_argument);
  const auto s = superpose({{1.0, a}, {1.0, a}}, true);
  EXPECT_NEAR(s.norm_squared(), 1.0, 1e-15);
}

TEST(ApplyModeUnitary, HongOuMandelBunching) {
  const auto reg = line_register(2);
  const auto in = make_fock(reg, {{{"m", 0, 0}, 1}, {{"m", 1, 0}, 1}});
  const auto out = apply_mode_unitary(beam_splitter(kPi / 4, 0.0), {ModeLabel{"m", 0, 0}, ModeLabel{"m", 1, 0}}, in);
  EXPECT_LT(std::abs(out.amplitude({1, 1})), 1e-15);
  EXPECT_NEAR(std::norm(out.amplitude({2, 0})), 0.5, 1e-14);
  EXPECT_NEAR(std::norm(out.amplitude({0, 2})), 0.5, 1e-14);
}

TEST(ApplyModeUnitary, MatchesPermanentOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2 + trial % 3;
    const Matrix u = random_unitary(m, rng);
    const auto reg = line_register(m);
    std::uniform_int_distribution<int> pick(0, m - 1);
    std::vector<int> in(m, 0);
    for (int p = 0; p < 3; ++p) ++in[pick(rng)];
    Occupation occ(in.begin(), in.end());
    const FockState s(reg, {{occ, 1.0}}, true);
    std::vector<std::size_t> targets(m);
    std::iota(targets.begin(), targets.end(), 0);
    const auto out = apply_mode_unitary(ModeUnitary(u), std::span<const std::size_t>(targets), s);
    EXPECT_NEAR(out.norm_squared(), 1.0, 1e-12);
    for (const auto& [o, amp] : out.terms()) {
      const std::vector<int> ov(o.begin(), o.end());
      EXPECT_NEAR(std::abs(amp - oracle::fock_amplitude(u, in, ov)), 0.0, 1e-12);
    }
  }
}

TEST(ApplyModeUnitary, ValidatesTargets) {
  const auto reg = line_register(3);
  const auto s = FockState::vacuum(reg);
  EXPECT_THROW(apply_mode_unitary(beam_splitter(0.3, 0.0), {ModeLabel{"m", 0, 0}}, s), std::invalid_argument);
  EXPECT_THROW(apply_mode_unitary(beam_splitter(0.3, 0.0), {ModeLabel{"m", 0, 0}, ModeLabel{"m", 0, 0}}, s),
               std::invalid_argument);
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = 0.5;
  EXPECT_THROW(ModeUnitary{bad}, std::invalid_argument);
}

TEST(PostSelection, ProjectsAndRenormalizes) {
  const auto reg = line_register(3);
  // (|1,1,0> + |0,1,1>)/sqrt2 conditioned on mode 1 firing, mode 0 empty
  const auto s = superpose({{1.0, make_fock(reg, {{{"m", 0, 0}, 1}, {{"m", 1, 0}, 1}})},
                            {1.0, make_fock(reg, {{{"m", 1, 0}, 1}, {{"m", 2, 0}, 1}})}},
                           true);
  const std::vector<ModeLabel> pattern{{"m", 1, 0}}, discard{{"m", 0, 0}};
  const auto ps = post_select_pattern(s, pattern, discard);
  EXPECT_TRUE(ps.valid);
  EXPECT_NEAR(ps.probability, 0.5, 1e-15);
  EXPECT_EQ(ps.conditional.reg().size(), 1u);
  EXPECT_NEAR(std::norm(ps.conditional.amplitude({1})), 1.0, 1e-15);
  EXPECT_THROW(post_select_pattern(s, pattern, pattern), std::invalid_argument);
}

TEST(ReduceToQudit, TracesOutInternalLabels) {
  const auto reg = make_register({{"c", 0, 0}, {"c", 0, 1}, {"c", 1, 0}, {"c", 1, 1}});
  // level 0 in internal 0, level 1 in internal 1: no coherence survives
  const auto s = superpose({{1.0, make_fock(reg, {{{"c", 0, 0}, 1}})}, {1.0, make_fock(reg, {{{"c", 1, 1}, 1}})}}, true);
  const auto rho = reduce_to_qudit(s, {ModeLabel{"c", 0, 0}, ModeLabel{"c", 1, 0}});
  EXPECT_NEAR(std::abs(rho.matrix()(0, 1)), 0.0, 1e-15);
  EXPECT_NEAR(rho.matrix()(0, 0).real(), 0.5, 1e-15);
  const auto coherent = superpose({{1.0, make_fock(reg, {{{"c", 0, 0}, 1}})}, {1.0, make_fock(reg, {{{"c", 1, 0}, 1}})}}, true);
  EXPECT_NEAR(std::abs(reduce_to_qudit(coherent, {ModeLabel{"c", 0, 0}, ModeLabel{"c", 1, 0}}).matrix()(0, 1)), 0.5, 1e-15);
  const auto two = make_fock(reg, {{{"c", 0, 0}, 1}, {{"c", 1, 0}, 1}});
  EXPECT_THROW(reduce_to_qudit(two, {ModeLabel{"c", 0, 0}, ModeLabel{"c", 1, 0}}), InvariantViolation);
}

TEST(DensityOperator, Validates) {
  EXPECT_THROW(DensityOperator(Matrix::Identity(2, 2)), InvariantViolation);
  Matrix neg(2, 2);
  neg << 1.5, 0, 0, -0.5;
  EXPECT_THROW(DensityOperator{neg}, InvariantViolation);
  EXPECT_NO_THROW(DensityOperator::maximally_mixed(3));
}

TEST(Dilation, RankOneDefect) {
  Matrix c = Matrix::Identity(2, 2);
  c(1, 1) = 0.5;
  const Matrix u = dilate_rank_one_contraction(c);
  EXPECT_TRUE(is_unitary(u, 1e-12));
  EXPECT_LT(max_abs_entry(u.topLeftCorner(2, 2) - c), 1e-12);
  Matrix two = 0.5 * Matrix::Identity(2, 2);
  EXPECT_THROW(dilate_rank_one_contraction(two), InvariantViolation);
}

}  // namespace
}  // namespace hdtele
