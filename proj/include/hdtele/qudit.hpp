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

#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "hdtele/fock.hpp"
#include "hdtele/linalg.hpp"

namespace hdtele {

/// Normalized d-level amplitude vector.
class QuditState {
 public:
  QuditState() = default;

  explicit QuditState(Vector amps) : amps_(std::move(amps)) {
    if (amps_.size() < 2) throw std::invalid_argument("QuditState: dimension must be >= 2");
    if (std::abs(amps_.squaredNorm() - 1.0) > 1e-10) {
      throw std::invalid_argument("QuditState: amplitudes are not normalized");
    }
  }

  /// Scales `amps` to unit norm first.
  static QuditState normalized(const Vector& amps) {
    const double n = amps.norm();
    if (n <= 0.0) throw std::invalid_argument("QuditState: zero vector");
    return QuditState(amps / n);
  }

  static QuditState basis(int d, int k) {
    Vector v = Vector::Zero(d);
    v(k) = 1.0;
    return QuditState(std::move(v));
  }

  const Vector& amplitudes() const { return amps_; }
  int dimension() const { return static_cast<int>(amps_.size()); }
  cplx operator[](int k) const { return amps_(k); }

 private:
  Vector amps_;
};

/// Haar-random pure state: normalized complex Gaussian vector.
template <class Rng>
QuditState random_qudit(int d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(d);
  for (int k = 0; k < d; ++k) v(k) = cplx{g(rng), g(rng)};
  return QuditState::normalized(v);
}

/// Generalized Bell label: m is the shift, n the phase, both mod d.
struct BellIndex {
  int m = 0;
  int n = 0;

  auto operator<=>(const BellIndex&) const = default;
};

/// |psi_mn> = d^{-1/2} sum_k w^{kn} |k>|k+m>, as a d^2 vector indexed i*d + j.
inline Vector bell_vector(BellIndex idx, int d) {
  if (d < 2) throw std::invalid_argument("bell_vector: d must be >= 2");
  if (idx.m < 0 || idx.m >= d || idx.n < 0 || idx.n >= d) throw std::invalid_argument("bell_vector: index out of range");
  Vector v = Vector::Zero(d * d);
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  for (int k = 0; k < d; ++k) v(k * d + (k + idx.m) % d) = s * root_of_unity(d, static_cast<long>(k) * idx.n);
  return v;
}

/// Two single-photon qudits in ports `first` and `second` (levels 0..d-1),
/// on a fresh 2d-mode register.
inline FockState bell_state(BellIndex idx, int d, const std::string& first = "a", const std::string& second = "b") {
  std::vector<ModeLabel> labels;
  for (int k = 0; k < d; ++k) labels.push_back({first, k, 0});
  for (int k = 0; k < d; ++k) labels.push_back({second, k, 0});
  auto reg = make_register(std::move(labels));
  const Vector v = bell_vector(idx, d);
  FockState::Terms terms;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (v(i * d + j) == cplx{}) continue;
      Occupation occ(2 * d, 0);
      occ[i] = 1;
      occ[d + j] = 1;
      terms.emplace(std::move(occ), v(i * d + j));
    }
  }
  return FockState(reg, std::move(terms), true);
}

/// X^m Z^n with X|k> = |k+1>, Z|k> = w^k |k>.
inline ModeUnitary weyl_operator(BellIndex idx, int d) {
  Matrix x = Matrix::Zero(d, d), z = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    x((k + 1) % d, k) = 1.0;
    z(k, k) = root_of_unity(d, k);
  }
  Matrix out = Matrix::Identity(d, d);
  for (int r = 0; r < ((idx.m % d) + d) % d; ++r) out = x * out;
  Matrix zn = Matrix::Identity(d, d);
  for (int r = 0; r < ((idx.n % d) + d) % d; ++r) zn = z * zn;
  return ModeUnitary(out * zn);
}

/// A labelled qutrit test state.
struct LabelledState {
  std::string label;
  QuditState state;
};

/// The twelve states of the four mutually unbiased qutrit bases, B1..B4.
inline std::vector<LabelledState> mub_states() {
  const cplx w = root_of_unity(3, 1), w2 = root_of_unity(3, 2);
  const cplx o{1.0, 0.0}, z{};
  const std::vector<std::array<cplx, 3>> raw = {
      {o, z, z}, {z, o, z}, {z, z, o},     // B1
      {o, o, o}, {o, w, w2}, {o, w2, w},   // B2
      {w, o, o}, {o, w, o}, {o, o, w},     // B3
      {w2, o, o}, {o, w2, o}, {o, o, w2},  // B4
  };
  std::vector<LabelledState> out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    Vector v(3);
    v << raw[i][0], raw[i][1], raw[i][2];
    out.push_back({"B" + std::to_string(i / 3 + 1) + "_" + std::to_string(i % 3 + 1), QuditState::normalized(v)});
  }
  return out;
}

}  // namespace hdtele
