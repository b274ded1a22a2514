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

#include <chrono>

#include <gtest/gtest.h>

#include "hdtele/noise.hpp"

namespace hdtele {
namespace {

TEST(Spdc, SeriesNormalizationAndTail) {
  for (auto kind : {SourceKind::entangled3, SourceKind::pair2}) {
    const FockState s = spdc_source(0.013, kind);
    EXPECT_NEAR(s.norm_squared(), 1.0, 1e-12);
  }
  // geometric series: the tail beyond two pairs is exactly p^3
  EXPECT_NEAR(spdc_truncation_tail(0.013, SourceKind::pair2, 2), std::pow(0.013, 3), 1e-15);
  EXPECT_LT(spdc_truncation_tail(0.013, SourceKind::entangled3, 2), std::pow(0.013, 3));
  EXPECT_GT(spdc_truncation_tail(0.013, SourceKind::entangled3, 2), 0.0);
  EXPECT_THROW(spdc_source(-0.1, SourceKind::pair2), std::invalid_argument);
  EXPECT_THROW(spdc_source(0.2, SourceKind::pair2), std::invalid_argument);
}

TEST(Spdc, DoublePairWeight) {
  // |(sum_k b_k^dag c_k^dag)^2 / (2 * 3)|0>|^2 = 2/3: six two-pair terms
  EXPECT_NEAR(pair_term_weight(SourceKind::entangled3, 2), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(pair_term_weight(SourceKind::entangled3, 1), 1.0, 1e-15);
  const double p = 0.013;
  const FockState s = spdc_source(p, SourceKind::entangled3);
  double two = 0.0, one = 0.0;
  for (const auto& [occ, amp] : s.terms()) {
    const int n = photon_count(occ);
    if (n == 4) two += std::norm(amp);
    if (n == 2) one += std::norm(amp);
  }
  EXPECT_NEAR(one, p / (1 + p + 2.0 * p * p / 3.0), 1e-12);
  EXPECT_NEAR(two, 2.0 * p * p / 3.0 / (1 + p + 2.0 * p * p / 3.0), 1e-12);
}

TEST(Loss, TracePreservingAndSinglePhoton) {
  const FockState s = spdc_source(0.05, SourceKind::entangled3);
  for (double eff : {0.0, 0.16, 0.5, 1.0}) {
    const auto rec = apply_loss(s, eff);
    double total = 0.0;
    for (const auto& r : rec) total += r.probability;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  const auto full = apply_loss(s, 1.0);
  ASSERT_EQ(full.size(), 1u);
  EXPECT_EQ(photon_count(full[0].lost), 0);
  for (const auto& r : apply_loss(s, 0.0))
    for (const auto& [occ, amp] : r.state.terms()) EXPECT_EQ(photon_count(occ), 0);

  const RegisterPtr reg = make_register({{"m", 0, 0}});
  const FockState one = make_fock(reg, {{ModeLabel{"m", 0, 0}, 1}});
  const CountHistogram h = count_histogram(one, {{ModeLabel{"m", 0, 0}}});
  EXPECT_NEAR(exact_click_probability(h, {true}, 0.16), 0.16, 1e-15);
  EXPECT_NEAR(exact_click_probability(h, {false}, 0.16), 0.84, 1e-15);
  EXPECT_THROW(apply_loss(one, 1.5), std::invalid_argument);
}

TEST(Loss, HistogramAgreesWithLossEnumeration) {
  const FockState s = spdc_source(0.05, SourceKind::entangled3);
  std::vector<std::vector<ModeLabel>> groups;
  for (const std::string port : {"b", "c"})
    for (int k = 0; k < 3; ++k) groups.push_back({ModeLabel{port, k, 0}});
  const auto h = count_histogram(s, groups);
  const double eff = 0.3;
  // P(only b0 and c0 click), from the enumerated loss channel
  double direct = 0.0;
  for (const auto& r : apply_loss(s, eff)) {
    for (const auto& [occ, amp] : r.state.terms()) {
      bool ok = true;
      for (std::size_t m = 0; m < occ.size(); ++m) {
        const bool fired = occ[m] > 0;
        const bool want = m == s.reg().index_of({"b", 0, 0}) || m == s.reg().index_of({"c", 0, 0});
        ok = ok && fired == want;
      }
      if (ok) direct += r.probability * std::norm(amp);
    }
  }
  const std::vector<bool> fire{true, false, false, true, false, false};
  EXPECT_NEAR(exact_click_probability(h, fire, eff), direct, 1e-14);
}

TEST(Distinguishability, GramReproduced) {
  Matrix g = Matrix::Identity(3, 3);
  g(0, 1) = g(1, 0) = std::sqrt(0.92);
  g(0, 2) = g(2, 0) = g(1, 2) = g(2, 1) = std::sqrt(0.82);
  const Matrix v = gram_vectors(g);
  EXPECT_LT(max_abs_entry(v.adjoint() * v - g), 1e-12);
  for (int i = 0; i < 3; ++i)
    for (int r = i + 1; r < 3; ++r) EXPECT_EQ(v(r, i), cplx{});
  const auto iv = internal_vectors(0.92, 0.82);
  EXPECT_NEAR(std::norm(iv.at("a").dot(iv.at("x"))), 0.92, 1e-12);
  EXPECT_NEAR(std::norm(iv.at("a").dot(iv.at("b"))), 0.82, 1e-12);
  EXPECT_NEAR(std::norm(iv.at("x").dot(iv.at("b"))), 0.82, 1e-12);
  EXPECT_THROW(internal_vectors(1.2, 0.5), std::invalid_argument);
}

TEST(Hom, InjectedVisibilityRecovered) {
  const double bw = 3.0, tau = coherence_time_fs(bw);
  EXPECT_DOUBLE_EQ(tau, 450.0);
  const auto scan = hom_scan(symmetric_delays(10 * tau, 100), bw, 0.82);
  EXPECT_NEAR(hom_visibility(scan), 0.82, 1e-6);
  const auto n = scan.coincidence.size();
  const auto dip = std::min_element(scan.coincidence.begin(), scan.coincidence.end()) - scan.coincidence.begin();
  EXPECT_EQ(scan.delays_fs[static_cast<std::size_t>(dip)], 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    EXPECT_NEAR(scan.coincidence[k], scan.coincidence[n - 1 - k], 1e-12);
    if (std::abs(scan.delays_fs[k]) > 3 * tau) {
      EXPECT_GT(scan.coincidence[k], 1.0 - 1e-3);
    }
  }
  EXPECT_NEAR(hom_coincidence(1.0), 0.0, 1e-15);
  EXPECT_NEAR(hom_coincidence(0.0), 0.5, 1e-15);
}

const NoisyTeleportModel& default_model() {
  static const NoisyTeleportModel model(NoiseParams{}.v_same, NoiseParams{}.v_cross);
  return model;
}

TEST(Landscape, OperatingPointAndMonotonicity) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> pd{0.10, 0.13, 0.16, 0.20, 0.25, 0.30};
  const std::vector<double> p{0.001, 0.002, 0.005, 0.01, 0.013, 0.02};
  const auto r = fidelity_landscape(default_model(), pd, p);
  const double f = default_model().evaluate(0.013, 0.16).fidelity;
  EXPECT_GE(f, 0.72);
  EXPECT_LE(f, 0.88);
  for (std::size_t i = 0; i < pd.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (j + 1 < p.size()) {
        EXPECT_LE(r.fidelity[i][j + 1], r.fidelity[i][j] + 1e-12);
      }
      if (i + 1 < pd.size()) {
        EXPECT_GE(r.fidelity[i + 1][j], r.fidelity[i][j] - 1e-12);
      }
    }
  const double slope = four_fold_slope(default_model(), {0.001, 0.002, 0.005, 0.01}, 0.16);
  EXPECT_NEAR(slope, 2.0, 0.05);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 600.0);
}

TEST(Landscape, IndistinguishableLowRateLimitIsIdeal) {
  const NoisyTeleportModel ideal(1.0, 1.0);
  EXPECT_GT(ideal.evaluate(1e-4, 0.16).fidelity, 0.999);
  EXPECT_THROW(ideal.evaluate(-0.1, 0.16), std::invalid_argument);
  EXPECT_THROW(ideal.evaluate(0.01, 1.5), std::invalid_argument);
}

TEST(Splitting, SweepIsSeededAndDegradesGracefully) {
  const std::vector<double> dev{0.0, 0.005, 0.01, 0.05 / 3.0, 0.025, 0.05};
  const auto r = splitting_ratio_perturbation(dev, 1000, 20260101);
  EXPECT_NEAR(r.fidelity[0][0], 1.0, 1e-9);
  for (std::size_t k = 0; k + 1 < dev.size(); ++k) EXPECT_LE(r.fidelity[0][k + 1], r.fidelity[0][k] + 1e-12);
  EXPECT_GE(r.fidelity[0][3], 0.97);
  EXPECT_EQ(r.trials[0][0], 1000);
  const auto again = splitting_ratio_perturbation({0.05}, 1000, 20260101, {}, 4);
  EXPECT_EQ(again.fidelity[0][0], r.fidelity[0][5]);
  EXPECT_THROW(splitting_ratio_perturbation({0.4}, 10, 1), std::invalid_argument);
}

TEST(Witness, DefaultSourceInBand) {
  const auto w = simulate_source_witness(NoiseParams{});
  EXPECT_GE(w.fidelity, 0.90);
  EXPECT_LE(w.fidelity, 0.98);
  EXPECT_NEAR(w.fidelity, entanglement_witness_fidelity(w.expectations), 1e-12);
  NoiseParams clean;
  clean.v_same = 1.0;
  clean.p = 1e-6;
  EXPECT_GT(simulate_source_witness(clean).fidelity, 0.999);
}

TEST(Params, Validation) {
  NoiseParams p;
  p.p = -0.1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.rH_deviation = 0.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace hdtele
