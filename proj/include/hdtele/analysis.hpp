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

// Fidelity estimation the way a three-outcome qutrit analyser reads it out,
// Poisson error bars, and the thresholds a qutrit teleporter must beat.

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "hdtele/fock.hpp"
#include "hdtele/qudit.hpp"

namespace hdtele {

/// <psi|rho|psi>, clamped to [0, 1] when it strays by at most 1e-9.
inline double fidelity(const DensityOperator& rho, const QuditState& psi) {
  if (rho.dimension() != psi.dimension()) throw std::invalid_argument("fidelity: dimension mismatch");
  const cplx f = psi.amplitudes().dot(rho.matrix() * psi.amplitudes());
  if (std::abs(f.imag()) > 1e-12) throw InvariantViolation("fidelity: expectation value is not real");
  double v = f.real();
  if (v < -1e-9 || v > 1.0 + 1e-9) throw InvariantViolation("fidelity: value outside [0,1]");
  return std::clamp(v, 0.0, 1.0);
}

/// Three-outcome projective readout: |phi+_ij>, |phi-_ij>, |k>.
struct MeasurementSetting {
  std::string label;  // "ijk"
  int i = 0, j = 1, k = 2;
  Vector plus, minus, rest;

  /// |phi+><phi+| - |phi-><phi-| + |k><k|
  Matrix sigma() const {
    return plus * plus.adjoint() - minus * minus.adjoint() + rest * rest.adjoint();
  }
};

/// Settings 012, 021, 120 for the target (|0> + e^{i phi1}|1> + e^{i phi2}|2>)/sqrt3.
/// The mean of their sigma operators is the target projector.
inline std::array<MeasurementSetting, 3> sigma_settings(double phi1, double phi2) {
  const std::array<double, 3> phase = {0.0, phi1, phi2};
  const std::array<std::array<int, 3>, 3> triples = {{{0, 1, 2}, {0, 2, 1}, {1, 2, 0}}};
  std::array<MeasurementSetting, 3> out;
  const double s = 1.0 / std::sqrt(2.0);
  for (std::size_t t = 0; t < 3; ++t) {
    auto& m = out[t];
    m.i = triples[t][0];
    m.j = triples[t][1];
    m.k = triples[t][2];
    m.label = std::to_string(m.i) + std::to_string(m.j) + std::to_string(m.k);
    const cplx rel = std::polar(1.0, phase[m.j] - phase[m.i]);
    m.plus = Vector::Zero(3);
    m.minus = Vector::Zero(3);
    m.rest = Vector::Zero(3);
    m.plus(m.i) = s;
    m.plus(m.j) = s * rel;
    m.minus(m.i) = s;
    m.minus(m.j) = -s * rel;
    m.rest(m.k) = 1.0;
  }
  return out;
}

/// Counts for one setting. Real-valued so exact expected proportions can be fed.
struct CountRecord {
  std::string setting;
  double n_plus = 0.0;
  double n_minus = 0.0;
  double n_rest = 0.0;

  double total() const { return n_plus + n_minus + n_rest; }
};

/// Expected outcome proportions of `setting` on `rho`.
inline CountRecord expected_counts(const MeasurementSetting& setting, const DensityOperator& rho, double total = 1.0) {
  auto p = [&](const Vector& v) { return total * std::max(0.0, v.dot(rho.matrix() * v).real()); };
  return {setting.label, p(setting.plus), p(setting.minus), p(setting.rest)};
}

struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

inline double ratio_estimate(std::span<const CountRecord> records) {
  double acc = 0.0;
  for (const auto& r : records) {
    if (!(r.total() > 0.0)) throw std::invalid_argument("fidelity_from_counts: zero total counts for setting " + r.setting);
    acc += (r.n_plus - r.n_minus + r.n_rest) / r.total();
  }
  return acc / static_cast<double>(records.size());
}

/// Plug-in ratio estimate averaged over the three settings; the error bar is
/// the standard deviation over Poisson-resampled replicas.
inline Estimate fidelity_from_counts(const std::array<CountRecord, 3>& records, std::uint64_t seed = 0x5eed5eedULL,
                                     int replicas = 10000) {
  Estimate e;
  e.value = ratio_estimate(records);
  std::mt19937_64 rng(seed);
  auto draw = [&](double mean) {
    if (mean <= 0.0) return 0.0;
    std::poisson_distribution<long long> pd(mean);
    return static_cast<double>(pd(rng));
  };
  double sum = 0.0, sum2 = 0.0;
  int used = 0;
  for (int r = 0; r < replicas; ++r) {
    std::array<CountRecord, 3> rep;
    bool ok = true;
    for (std::size_t s = 0; s < 3; ++s) {
      rep[s] = {records[s].setting, draw(records[s].n_plus), draw(records[s].n_minus), draw(records[s].n_rest)};
      ok = ok && rep[s].total() > 0.0;
    }
    if (!ok) continue;
    const double v = ratio_estimate(rep);
    sum += v;
    sum2 += v * v;
    ++used;
  }
  if (used > 1) {
    const double mean = sum / used;
    e.sigma = std::sqrt(std::max(0.0, (sum2 - used * mean * mean) / (used - 1)));
  }
  return e;
}

/// Best measure-and-prepare fidelity for a d-level system: 2/(d+1).
inline double classical_bound(int d) {
  if (d < 2) throw std::invalid_argument("classical_bound: d must be >= 2");
  return 2.0 / (d + 1.0);
}

/// Largest |<chi|psi>|^2 over unit chi in the span of the orthonormal columns of `basis`.
inline double best_overlap_in_subspace(const Matrix& basis, const Vector& psi) {
  return (basis.adjoint() * psi).squaredNorm() / psi.squaredNorm();
}

struct SubspaceBound {
  double value = 0.0;
  Matrix subspace;  // 3 x 2 orthonormal columns attaining `value`
  int evaluations = 0;
  bool converged = false;
};

/// Mean best-overlap of the nine superposition MUB states (B2..B4) with a
/// fixed two-dimensional subspace S, maximized over S. S is parametrized by
/// its unit normal n = (cos a, sin a cos b e^{i g1}, sin a sin b e^{i g2}).
/// Brute-force grid, then repeated grid refinement around the incumbent.
inline SubspaceBound qubit_subspace_bound(int grid = 9, int refinements = 12) {
  std::vector<Vector> states;
  const auto mubs = mub_states();
  for (std::size_t s = 3; s < mubs.size(); ++s) states.push_back(mubs[s].state.amplitudes());

  auto subspace_for = [](const std::array<double, 4>& x) {
    Vector n(3);
    n << std::cos(x[0]), std::sin(x[0]) * std::cos(x[1]) * std::polar(1.0, x[2]),
        std::sin(x[0]) * std::sin(x[1]) * std::polar(1.0, x[3]);
    Matrix proj = Matrix::Identity(3, 3) - n * n.adjoint();
    Eigen::SelfAdjointEigenSolver<Matrix> es(proj);
    return Matrix(es.eigenvectors().rightCols(2));
  };
  SubspaceBound best;
  auto score = [&](const std::array<double, 4>& x) {
    const Matrix basis = subspace_for(x);
    double acc = 0.0;
    for (const auto& s : states) acc += best_overlap_in_subspace(basis, s);
    ++best.evaluations;
    return acc / static_cast<double>(states.size());
  };

  std::array<double, 4> centre{kPi / 4, kPi / 4, 0.0, 0.0};
  std::array<double, 4> half{kPi / 4, kPi / 4, kPi, kPi};
  best.value = -1.0;
  double previous = -1.0;
  for (int round = 0; round <= refinements; ++round) {
    std::array<double, 4> incumbent = centre;
    for (int i0 = 0; i0 < grid; ++i0)
      for (int i1 = 0; i1 < grid; ++i1)
        for (int i2 = 0; i2 < grid; ++i2)
          for (int i3 = 0; i3 < grid; ++i3) {
            const std::array<int, 4> idx{i0, i1, i2, i3};
            std::array<double, 4> x;
            for (int d = 0; d < 4; ++d) x[d] = centre[d] + half[d] * (2.0 * idx[d] / (grid - 1) - 1.0);
            const double v = score(x);
            if (v > best.value) {
              best.value = v;
              incumbent = x;
            }
          }
    centre = incumbent;
    for (auto& h : half) h *= 0.5;
    best.converged = round > 0 && std::abs(best.value - previous) < 1e-12;
    previous = best.value;
  }
  best.subspace = subspace_for(centre);
  return best;
}

/// Bell-state fidelity of a two-qutrit state from the expectations of
/// sx01xsx01, sy01xsy01, sx02xsx02, sy02xsy02, sx12xsx12, sy12xsy12 and the
/// population P = sum_k |kk><kk|, in that order.
inline double entanglement_witness_fidelity(const std::array<double, 7>& e) {
  double acc = e[6];
  for (int p = 0; p < 3; ++p) acc += 0.5 * (e[2 * p] - e[2 * p + 1]);
  return acc / 3.0;
}

/// The seven witness observables as 9x9 matrices, same order as above.
inline std::array<Matrix, 7> witness_observables() {
  auto ket = [](int k) {
    Vector v = Vector::Zero(3);
    v(k) = 1.0;
    return v;
  };
  std::array<Matrix, 7> out;
  const std::array<std::array<int, 2>, 3> pairs = {{{0, 1}, {0, 2}, {1, 2}}};
  for (std::size_t p = 0; p < 3; ++p) {
    const Vector i = ket(pairs[p][0]), j = ket(pairs[p][1]);
    const Matrix sx = i * j.adjoint() + j * i.adjoint();
    const Matrix sy = -kI * i * j.adjoint() + kI * j * i.adjoint();
    out[2 * p] = Eigen::kroneckerProduct(sx, sx).eval();
    out[2 * p + 1] = Eigen::kroneckerProduct(sy, sy).eval();
  }
  Matrix pop = Matrix::Zero(9, 9);
  for (int k = 0; k < 3; ++k) pop(4 * k, 4 * k) = 1.0;
  out[6] = pop;
  return out;
}

struct FidelityEntry {
  std::string label;
  double fidelity = 0.0;
  double sigma = 0.0;
};

struct MubReport {
  std::vector<FidelityEntry> entries;
  double mean = 0.0;
  double sigma_mean = 0.0;  // Gaussian propagation of the per-state errors
  double classical_threshold = 0.5;
  double qubit_threshold = 2.0 / 3.0;
  bool beats_classical = false;
  bool beats_qubit = false;
};

inline MubReport mub_suite_report(std::vector<FidelityEntry> entries) {
  if (entries.size() != 12) throw std::invalid_argument("mub_suite_report: expected 12 entries, got " + std::to_string(entries.size()));
  MubReport r;
  double var = 0.0;
  for (const auto& e : entries) {
    r.mean += e.fidelity;
    var += e.sigma * e.sigma;
  }
  r.mean /= 12.0;
  r.sigma_mean = std::sqrt(var) / 12.0;
  r.classical_threshold = classical_bound(3);
  r.beats_classical = r.mean > r.classical_threshold;
  r.beats_qubit = r.mean > r.qubit_threshold;
  r.entries = std::move(entries);
  return r;
}

}  // namespace hdtele
