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

// Triangular (Reck) decomposition of a mode unitary into two-mode rotations
// and single-mode phases, plus the line-oriented text form of a mesh plan.

#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hdtele/linalg.hpp"
#include "hdtele/optics.hpp"

namespace hdtele {

struct MeshElement {
  enum class Kind { rotation, phase };
  Kind kind = Kind::rotation;
  int mode_a = 0;
  int mode_b = 0;  // unused for phases
  double theta = 0.0;
  double phi = 0.0;

  bool operator==(const MeshElement&) const = default;
};

/// Elements in the order light meets them: recompose() = E_n ... E_2 E_1.
struct MeshPlan {
  std::vector<MeshElement> elements;

  bool operator==(const MeshPlan&) const = default;
};

namespace detail {

// phi in (-pi, pi], with values within 1e-15 of zero snapped to 0
inline double wrap_phase(double phi) {
  double w = std::remainder(phi, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  if (std::abs(w) < 1e-15) w = 0.0;
  return w;
}

inline Matrix element_matrix(const MeshElement& e, int m) {
  if (e.mode_a < 0 || e.mode_a >= m) throw std::out_of_range("mesh element mode out of range");
  if (e.kind == MeshElement::Kind::phase) {
    Matrix out = Matrix::Identity(m, m);
    out(e.mode_a, e.mode_a) = std::polar(1.0, e.phi);
    return out;
  }
  if (e.mode_b < 0 || e.mode_b >= m || e.mode_b == e.mode_a) {
    throw std::out_of_range("mesh rotation mode out of range");
  }
  return embed(beam_splitter(e.theta, e.phi).matrix(), {e.mode_a, e.mode_b}, m);
}

}  // namespace detail

/// Ordered product of the plan's primitives embedded in `m` modes.
inline ModeUnitary recompose(const MeshPlan& plan, int m) {
  Matrix u = Matrix::Identity(m, m);
  for (const auto& e : plan.elements) u = detail::element_matrix(e, m) * u;
  return ModeUnitary(std::move(u), 1e-9);
}

/// Nulls the strictly lower triangle row by row, starting from the last row,
/// with rotations on adjacent columns applied from the right. The residual
/// diagonal becomes trailing phase elements. Identity rotations and zero
/// phases are omitted, so the identity decomposes to an empty plan.
inline MeshPlan reck_decompose(const ModeUnitary& u) {
  const auto n = static_cast<int>(u.size());
  Matrix w = u.matrix();
  std::vector<MeshElement> nulling;  // T_1, T_2, ... with U T_1 T_2 ... = D
  for (int row = n - 1; row >= 1; --row) {
    for (int col = 0; col < row; ++col) {
      const cplx x = w(row, col);
      const cplx y = w(row, col + 1);
      if (std::abs(x) < 1e-15) continue;
      // x c + y i e^{-i phi} s = 0
      const double theta = std::atan2(std::abs(x), std::abs(y));
      // e^{-i phi} = i (x / y) |y| / |x|; with y == 0 any phi works and 0 is used
      const double phi = std::abs(y) >= 1e-15 ? -std::arg(kI * x / y) : 0.0;
      MeshElement t{MeshElement::Kind::rotation, col, col + 1, theta, detail::wrap_phase(phi)};
      w = w * detail::element_matrix(t, n);
      w(row, col) = 0.0;
      nulling.push_back(t);
    }
  }
  MeshPlan plan;
  // U = D T_k^dag ... T_1^dag; T^dag(theta, phi) = T(theta, phi + pi)
  for (const auto& t : nulling) {
    if (std::abs(t.theta) < 1e-15) continue;
    MeshElement inv = t;
    inv.phi = detail::wrap_phase(t.phi + kPi);
    plan.elements.push_back(inv);
  }
  for (int k = 0; k < n; ++k) {
    const double phi = detail::wrap_phase(std::arg(w(k, k)));
    if (phi != 0.0) plan.elements.push_back({MeshElement::Kind::phase, k, 0, 0.0, phi});
  }
  return plan;
}

/// One primitive per line: `ROT i j theta phi` or `PHASE i phi`, radians,
/// 12 significant digits.
inline std::string to_text(const MeshPlan& plan) {
  std::string out;
  char buf[128];
  for (const auto& e : plan.elements) {
    if (e.kind == MeshElement::Kind::rotation) {
      std::snprintf(buf, sizeof buf, "ROT %d %d %.12g %.12g\n", e.mode_a, e.mode_b, e.theta, e.phi);
    } else {
      std::snprintf(buf, sizeof buf, "PHASE %d %.12g\n", e.mode_a, e.phi);
    }
    out += buf;
  }
  return out;
}

/// Inverse of to_text. Blank lines and lines starting with '#' are skipped.
inline MeshPlan plan_from_text(std::istream& in) {
  MeshPlan plan;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    MeshElement e;
    if (tag == "ROT") {
      e.kind = MeshElement::Kind::rotation;
      ls >> e.mode_a >> e.mode_b >> e.theta >> e.phi;
    } else if (tag == "PHASE") {
      e.kind = MeshElement::Kind::phase;
      ls >> e.mode_a >> e.phi;
    } else {
      throw std::invalid_argument("mesh plan line " + std::to_string(lineno) + ": unknown primitive '" + tag + "'");
    }
    if (ls.fail()) throw std::invalid_argument("mesh plan line " + std::to_string(lineno) + ": malformed");
    plan.elements.push_back(e);
  }
  return plan;
}

inline MeshPlan plan_from_text(const std::string& text) {
  std::istringstream in(text);
  return plan_from_text(in);
}

}  // namespace hdtele
