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

#include "hdtele/teleport.hpp"
#include "oracles.hpp"

namespace hdtele {
namespace {

constexpr double kTol = 1e-9;

std::vector<QuditState> test_inputs(int d, int random_count, std::uint64_t seed) {
  std::vector<QuditState> in;
  if (d == 3)
    for (const auto& s : mub_states()) in.push_back(s.state);
  std::mt19937_64 rng(seed);
  for (int k = 0; k < random_count; ++k) in.push_back(random_qudit(d, rng));
  return in;
}

std::vector<int> pattern_ports(const ClickPattern& p, const ModeDictionary& dict) {
  std::vector<int> ports;
  for (const auto& det : p.detectors) {
    const auto q = det.substr(0, det.size() - 1);
    ports.push_back(static_cast<int>(std::find(dict.output_ports.begin(), dict.output_ports.end(), q) - dict.output_ports.begin()));
  }
  return ports;
}

TEST(ExpandedUnitary, FrozenMatrixIsDerived) {
  const Matrix derived = derive_expanded_unitary(3).matrix();
  EXPECT_LT(max_abs_entry(derived - u31_matrix()), 1e-12);
  EXPECT_TRUE(is_unitary(u31_matrix(), 1e-14));
}

TEST(ExpandedUnitary, BlockIsInverseOfAllToAllMinusIdentity) {
  for (int n : {2, 3, 4}) {
    const Matrix u = derive_expanded_unitary(n).matrix();
    ASSERT_EQ(u.rows(), n + 1);
    EXPECT_TRUE(is_unitary(u, 1e-12));
    const Matrix expect = Matrix::Constant(n, n, 1.0 / (n - 1)) - Matrix::Identity(n, n);
    EXPECT_LT(max_abs_entry(u.topLeftCorner(n, n) - expect), 1e-12) << "N=" << n;
  }
}

TEST(Network, ModeDictionary) {
  const TeleportNetwork net(3, Variant::main, Elements::experimental);
  const auto& d = net.modes();
  EXPECT_EQ(d.output_ports, (std::vector<std::string>{"a'", "b'", "x'"}));
  EXPECT_EQ(d.detectors.at("a'0").front().port, "a.h");
  EXPECT_EQ(d.detectors.at("b'2").front().port, "b.h");
  EXPECT_EQ(d.detectors.at("x'1").front().port, "b.v");
  EXPECT_EQ(net.clean_patterns().size(), 3u);
  EXPECT_EQ(net.all_patterns().size(), 27u);
  EXPECT_THROW(TeleportNetwork(4, Variant::main, Elements::experimental), std::invalid_argument);
  EXPECT_THROW(TeleportNetwork(5, Variant::main, Elements::ideal), std::invalid_argument);
}

TEST(MainVariant, CleanPatternsTeleportExactly) {
  for (auto elements : {Elements::ideal, Elements::experimental}) {
    const Teleporter t(3, Variant::main, elements);
    ASSERT_EQ(t.patterns().size(), 3u);
    for (const auto& in : test_inputs(3, 50, 11)) {
      const auto outs = t.run(in);
      double total = 0.0;
      for (const auto& o : outs) {
        EXPECT_NEAR(o.herald_probability, 1.0 / 243.0, kTol) << o.pattern;
        EXPECT_NEAR(o.success_probability, 1.0 / 243.0, kTol);
        EXPECT_NEAR(o.fidelity_vs_input, 1.0, kTol);
        total += o.success_probability;
      }
      EXPECT_NEAR(total, 1.0 / 81.0, kTol);
    }
  }
}

TEST(MainVariant, CleanPatternsHeraldBellProjection) {
  for (auto elements : {Elements::ideal, Elements::experimental}) {
    const TeleportNetwork net(3, Variant::main, elements);
    const auto probes = propagate_probes(net);
    for (const auto& p : net.clean_patterns()) {
      const auto h = heralded_projection(net, p, probes);
      ASSERT_TRUE(h.bell.has_value()) << p.name;
      EXPECT_NEAR(h.bell_fidelity, 1.0, kTol);
      Eigen::SelfAdjointEigenSolver<Matrix> es(h.operator_on_pair());
      EXPECT_NEAR(es.eigenvalues()(8), 1.0, kTol);
      EXPECT_LT(es.eigenvalues().head(8).cwiseAbs().maxCoeff(), kTol);
      // one Bell state per clean pattern, and it is psi_00
      EXPECT_EQ(*h.bell, (BellIndex{0, 0}));
    }
  }
}

TEST(MainVariant, HeraldedFunctionalMatchesPermanentOracle) {
  const TeleportNetwork net(3, Variant::main, Elements::ideal);
  const auto probes = propagate_probes(net);
  for (const auto& p : net.all_patterns()) {
    const auto h = heralded_projection(net, p, probes);
    const auto ports = pattern_ports(p, net.modes());
    for (int i = 0; i < 3; ++i)
      for (int l = 0; l < 3; ++l)
        EXPECT_NEAR(std::abs(std::conj(h.phi(3 * i + l)) - oracle::pattern_amplitude(u31_matrix(), 3, i, l, ports)), 0.0, 1e-12);
  }
}

TEST(MainVariant, OnlyCleanPatternsHeraldBellStates) {
  const TeleportNetwork net(3, Variant::main, Elements::ideal);
  const auto found = bell_heralding_patterns(net);
  std::vector<std::string> names;
  for (const auto& p : found) names.push_back(p.name);
  EXPECT_EQ(names, (std::vector<std::string>{"{a'0 a'1 a'2}", "{b'0 b'1 b'2}", "{x'0 x'1 x'2}"}));
}

TEST(FeedForward, AllPatternsAfterCorrection) {
  for (auto elements : {Elements::ideal, Elements::experimental}) {
    const Teleporter t(3, Variant::feedforward, elements);
    ASSERT_EQ(t.patterns().size(), 27u);
    for (const auto& in : test_inputs(3, 10, 12)) {
      const auto outs = t.run(in);
      double total = 0.0;
      for (const auto& o : outs) {
        EXPECT_NEAR(o.success_probability, 1.0 / 243.0, kTol) << o.pattern;
        EXPECT_NEAR(o.fidelity_vs_input, 1.0, kTol);
        total += o.success_probability;
      }
      EXPECT_NEAR(total, 1.0 / 9.0, kTol);
    }
  }
}

TEST(FeedForward, CorrectionStructure) {
  const Teleporter t(3, Variant::feedforward, Elements::ideal);
  const Matrix block = u31_matrix().topLeftCorner(3, 3);
  for (const auto& p : t.patterns()) {
    EXPECT_FALSE(p.heralded.has_value());
    const auto& c = p.correction;
    EXPECT_TRUE(c.uses_extra_level);
    EXPECT_TRUE(is_unitary(c.unitary, 1e-10));
    EXPECT_LT(max_abs_entry(c.unitary.topLeftCorner(3, 3) - c.op), 1e-12);
    ASSERT_TRUE(c.pre_phases && c.post_phases) << p.name;
    const Matrix rebuilt = c.post_phases->asDiagonal() * block * c.pre_phases->asDiagonal();
    EXPECT_LT(max_abs_entry(rebuilt - c.op), 1e-9);
    for (Eigen::Index k = 0; k < 3; ++k) {
      EXPECT_NEAR(std::abs((*c.pre_phases)(k)), 1.0, 1e-12);
      EXPECT_NEAR(std::abs((*c.post_phases)(k)), 1.0, 1e-12);
    }
  }
}

TEST(FeedForward, PatternMapMatchesPermanentOracle) {
  const TeleportNetwork net(3, Variant::feedforward, Elements::ideal);
  const Matrix id = Matrix::Identity(3, 3);
  for (const auto& p : net.all_patterns()) {
    const Matrix t = bob_transfer(net, p);
    const auto ports = pattern_ports(p, net.modes());
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k)
        EXPECT_NEAR(std::abs(t(k, i) - oracle::pattern_amplitude(id, 3, i, k, ports) / std::sqrt(3.0)), 0.0, 1e-12);
    // singular values squared {4, 1, 1} / 243: the best uniform correction keeps 1/243
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Matrix>(t).singularValues();
    EXPECT_NEAR(sv(0) * sv(0), 4.0 / 243.0, 1e-12);
    EXPECT_NEAR(sv(2) * sv(2), 1.0 / 243.0, 1e-12);
  }
}

TEST(FeedForward, FrozenPhasesForMixedPattern) {
  const Teleporter t(3, Variant::feedforward, Elements::ideal);
  const auto& p = t.patterns()[1];
  ASSERT_EQ(p.name, "{a'0 a'1 b'2}");
  const cplx w = std::polar(1.0, 2.0 * kPi / 3.0);
  Vector pre(3), post(3);
  pre << 1.0, 1.0, w;
  post << -1.0, -1.0, -w * w;
  EXPECT_LT((*p.correction.pre_phases - pre).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((*p.correction.post_phases - post).cwiseAbs().maxCoeff(), 1e-9);
}

double oracle_pattern_probability(int n, const Matrix& ub, const QuditState& in, const std::vector<int>& ports) {
  // Bob's unnormalized state: sum_{i,l} alpha_i A(i, l) |l> / sqrt(n)
  Vector bob = Vector::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l) bob(l) += in[i] * oracle::pattern_amplitude(ub, n, i, l, ports) / std::sqrt(double(n));
  return bob.squaredNorm();
}

TEST(GeneralScheme, QubitCaseIsStandardBellMeasurement) {
  const TeleportNetwork net(2, Variant::main, Elements::ideal);
  const auto patterns = bell_heralding_patterns(net);
  ASSERT_EQ(patterns.size(), 4u);
  std::mt19937_64 rng(21);
  const Matrix ub = derive_expanded_unitary(2).matrix();
  for (int trial = 0; trial < 20; ++trial) {
    const auto in = random_qudit(2, rng);
    const auto outs = general_scheme(2, in);
    double total = 0.0;
    for (std::size_t k = 0; k < outs.size(); ++k) {
      EXPECT_NEAR(outs[k].fidelity_vs_input, 1.0, kTol);
      EXPECT_NEAR(outs[k].success_probability, 1.0 / 8.0, kTol);
      EXPECT_NEAR(outs[k].success_probability, oracle_pattern_probability(2, ub, in, pattern_ports(patterns[k], net.modes())), 1e-12);
      total += outs[k].success_probability;
    }
    // two of the four Bell states are identified, each with probability 1/4
    EXPECT_NEAR(total, 0.5, kTol);
  }
  std::set<BellIndex> heralded;
  for (const auto& p : patterns) heralded.insert(*p.heralded);
  EXPECT_EQ(heralded.size(), 2u);
}

TEST(GeneralScheme, FourLevelsWithTwoAncillas) {
  const TeleportNetwork net(4, Variant::main, Elements::ideal);
  EXPECT_EQ(net.modes().ancilla_ports.size(), 2u);
  std::mt19937_64 rng(4);
  const auto in = random_qudit(4, rng);
  const auto outs = general_scheme(4, in);
  ASSERT_EQ(outs.size(), 4u);
  const auto patterns = bell_heralding_patterns(net);
  const Matrix ub = derive_expanded_unitary(4).matrix();
  for (std::size_t k = 0; k < outs.size(); ++k) {
    EXPECT_NEAR(outs[k].fidelity_vs_input, 1.0, 1e-8);
    EXPECT_NEAR(outs[k].success_probability, oracle_pattern_probability(4, ub, in, pattern_ports(patterns[k], net.modes())), 1e-12);
  }
}

TEST(GeneralScheme, ThreeLevelsAgreeWithMainVariant) {
  std::mt19937_64 rng(3);
  const auto in = random_qudit(3, rng);
  const auto outs = general_scheme(3, in);
  ASSERT_EQ(outs.size(), 3u);
  for (const auto& o : outs) EXPECT_NEAR(o.success_probability, 1.0 / 243.0, kTol);
  EXPECT_THROW(general_scheme(5, in), std::invalid_argument);
  EXPECT_THROW(general_scheme(4, in), std::invalid_argument);
}

TEST(Teleport, InputDimensionChecked) {
  EXPECT_THROW(run_teleport(QuditState::basis(2, 0), Variant::main, Elements::ideal), std::invalid_argument);
  const auto p = assemble_pipeline(QuditState::basis(3, 1), Variant::main, Elements::ideal);
  EXPECT_NEAR(p.state.norm_squared(), 1.0, 1e-12);
  EXPECT_EQ(p.state.max_photons(), 4);
}

}  // namespace
}  // namespace hdtele
