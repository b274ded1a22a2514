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

// Mode unitaries for linear-optical elements.
//
// Phase convention: transmission amplitudes are real and non-negative,
// reflection amplitudes carry a factor +i. Matrices are indexed (out, in).

#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdtele/linalg.hpp"

namespace hdtele {

/// [cos t, i e^{i phi} sin t; i e^{-i phi} sin t, cos t]
inline ModeUnitary beam_splitter(double theta, double phi) {
  Matrix m(2, 2);
  const double c = std::cos(theta), s = std::sin(theta);
  m << c, kI * std::polar(1.0, phi) * s, kI * std::polar(1.0, -phi) * s, c;
  return ModeUnitary(std::move(m));
}

enum class WaveplateKind { half, quarter };

/// Jones matrix R(-angle) diag(1, e^{-i retardance}) R(angle) on an (h, v) pair.
/// A half-wave plate at 22.5 deg maps h to (h + v)/sqrt2; a quarter-wave plate
/// at 45 deg maps h to (h + i v)/sqrt2 up to a global phase.
inline ModeUnitary waveplate(WaveplateKind kind, double angle) {
  const double retardance = kind == WaveplateKind::half ? kPi : kPi / 2.0;
  const double c = std::cos(angle), s = std::sin(angle);
  Matrix rot(2, 2);
  rot << c, s, -s, c;
  Matrix ret = Matrix::Zero(2, 2);
  ret(0, 0) = 1.0;
  ret(1, 1) = std::polar(1.0, -retardance);
  return ModeUnitary(rot.adjoint() * ret * rot);
}

/// Polarization-dependent splitter on modes (port1 h, port1 v, port2 h, port2 v).
/// Vertical light is fully reflected; horizontal light is reflected with
/// probability `r_h`. r_h = 0 is an ideal PBS, r_h = 1/3 the partially
/// polarization-dependent splitter of the hybrid multiport.
inline ModeUnitary polarizing_splitter(double r_h) {
  if (!(r_h >= 0.0 && r_h <= 1.0)) throw std::invalid_argument("polarizing_splitter: r_h outside [0,1]");
  const double t = std::sqrt(1.0 - r_h), r = std::sqrt(r_h);
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = t;
  m(0, 2) = kI * r;
  m(2, 0) = kI * r;
  m(2, 2) = t;
  m(1, 3) = kI;
  m(3, 1) = kI;
  return ModeUnitary(std::move(m));
}

/// N-port Fourier multiport: entry (j, k) = w^{jk} / sqrt(N), w = exp(2 pi i / N).
inline ModeUnitary qft_multiport(int n) {
  if (n < 2) throw std::invalid_argument("qft_multiport: N must be >= 2");
  Matrix m(n, n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) m(j, k) = s * root_of_unity(n, static_cast<long>(j) * k);
  return ModeUnitary(std::move(m));
}

/// Embeds a k x k unitary acting on `targets` into an m-mode identity.
inline Matrix embed(const Matrix& u, const std::vector<int>& targets, int m) {
  Matrix out = Matrix::Identity(m, m);
  for (std::size_t r = 0; r < targets.size(); ++r)
    for (std::size_t c = 0; c < targets.size(); ++c)
      out(targets[r], targets[c]) = u(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return out;
}

/// Hybrid polarization-path realization of the three-port Fourier multiport
/// for one path level. Physical modes: two polarizations on each of the a, x
/// and b rails.
struct ExperimentalMultiport {
  static constexpr int kModes = 6;
  static inline const std::array<std::string, kModes> kPhysical = {"a.h", "a.v", "x.h", "x.v", "b.h", "b.v"};

  ModeUnitary unitary;
  /// logical input port ("a", "b", "x") -> physical mode index
  std::map<std::string, int> inputs;
  /// logical output port ("a'", "b'", "x'") -> physical mode index
  std::map<std::string, int> outputs;
  /// physical modes that no detector watches
  std::vector<int> unused_outputs;

  /// Logical transfer matrix, rows a', b', x' and columns a, b, x.
  Matrix logical_transfer() const {
    static const std::array<std::string, 3> in = {"a", "b", "x"};
    static const std::array<std::string, 3> out = {"a'", "b'", "x'"};
    Matrix t(3, 3);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) t(r, c) = unitary(outputs.at(out[r]), inputs.at(in[c]));
    return t;
  }
};

/// PBS(a, x) -> HWP 22.5 deg on rail a -> splitter(r_h) between rails a and b
/// -> QWP 45 deg on rail b. The closing PBS on rail b only routes b.h and b.v
/// to separate detectors and is the identity on these mode slots.
inline ExperimentalMultiport build_experimental_multiport(double r_h = 1.0 / 3.0) {
  constexpr int m = ExperimentalMultiport::kModes;
  const Matrix pbs = embed(polarizing_splitter(0.0).matrix(), {0, 1, 2, 3}, m);
  const Matrix hwp = embed(waveplate(WaveplateKind::half, kPi / 8.0).matrix(), {0, 1}, m);
  const Matrix ppdbs = embed(polarizing_splitter(r_h).matrix(), {0, 1, 4, 5}, m);
  const Matrix qwp = embed(waveplate(WaveplateKind::quarter, kPi / 4.0).matrix(), {4, 5}, m);
  ExperimentalMultiport mp{ModeUnitary(qwp * ppdbs * hwp * pbs), {}, {}, {}};
  mp.inputs = {{"a", 0}, {"b", 4}, {"x", 3}};
  mp.outputs = {{"a'", 0}, {"b'", 4}, {"x'", 5}};
  mp.unused_outputs = {1, 2, 3};
  return mp;
}

/// Diagonal phases (d_out, d_in) with diag(d_out) * t * diag(d_in) = target, if
/// they exist within `tol`. Requires nonzero first row and column in `t`.
struct PhaseEquivalence {
  Vector out_phases, in_phases;
  double residual = 0.0;
};

inline std::optional<PhaseEquivalence> phase_equivalence(const Matrix& t, const Matrix& target, double tol = 1e-9) {
  const auto n = t.rows();
  if (t.cols() != n || target.rows() != n || target.cols() != n) return std::nullopt;
  PhaseEquivalence pe{Vector(n), Vector(n), 0.0};
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(t(i, 0)) < 1e-12 || std::abs(target(i, 0)) < 1e-12) return std::nullopt;
    const cplx ratio = target(i, 0) / t(i, 0);
    pe.out_phases(i) = ratio / std::abs(ratio);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const cplx lhs = pe.out_phases(0) * t(0, j);
    if (std::abs(lhs) < 1e-12) return std::nullopt;
    const cplx ratio = target(0, j) / lhs;
    pe.in_phases(j) = ratio / std::abs(ratio);
  }
  const Matrix rebuilt = pe.out_phases.asDiagonal() * t * pe.in_phases.asDiagonal();
  pe.residual = max_abs_entry(rebuilt - target);
  if (pe.residual > tol) return std::nullopt;
  return pe;
}

}  // namespace hdtele
