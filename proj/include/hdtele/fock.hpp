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

// Second-quantized multi-photon states over a register of optical modes.
//
// Basis kets |n_0 ... n_{M-1}> are unit vectors, so a probability is the
// squared magnitude of the stored amplitude. A creation operator acting on
// occupation n contributes sqrt(n+1); mode transformations map
// a_j^dag -> sum_k U_kj a_k^dag.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hdtele/linalg.hpp"

namespace hdtele {

inline constexpr int kPhotonCutoff = 6;
inline constexpr double kPruneThreshold = 1e-14;

/// One optical mode: a port symbol, a logical level and an internal index
/// (spectral/temporal label used by the distinguishability model).
struct ModeLabel {
  std::string port;
  int level = 0;
  int internal = 0;

  auto operator<=>(const ModeLabel&) const = default;
};

inline std::string to_string(const ModeLabel& m) {
  std::string s = m.port + std::to_string(m.level);
  if (m.internal != 0) s += "#" + std::to_string(m.internal);
  return s;
}

class ModeRegister {
 public:
  ModeRegister() = default;

  explicit ModeRegister(std::vector<ModeLabel> labels) : labels_(std::move(labels)) {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i].internal < 0 || labels_[i].level < 0) {
        throw std::invalid_argument("ModeRegister: negative level/internal in " + to_string(labels_[i]));
      }
      if (!index_.emplace(labels_[i], i).second) {
        throw std::invalid_argument("ModeRegister: duplicate label " + to_string(labels_[i]));
      }
    }
  }

  std::size_t size() const { return labels_.size(); }
  const std::vector<ModeLabel>& labels() const { return labels_; }
  const ModeLabel& label(std::size_t i) const { return labels_.at(i); }
  bool contains(const ModeLabel& m) const { return index_.contains(m); }

  std::size_t index_of(const ModeLabel& m) const {
    auto it = index_.find(m);
    if (it == index_.end()) throw std::out_of_range("unknown mode label " + to_string(m));
    return it->second;
  }

  bool operator==(const ModeRegister& o) const { return labels_ == o.labels_; }

 private:
  std::vector<ModeLabel> labels_;
  std::map<ModeLabel, std::size_t> index_;
};

using RegisterPtr = std::shared_ptr<const ModeRegister>;

inline RegisterPtr make_register(std::vector<ModeLabel> labels) {
  return std::make_shared<const ModeRegister>(std::move(labels));
}

using Occupation = std::vector<std::uint8_t>;

inline int photon_count(const Occupation& occ) {
  int n = 0;
  for (auto v : occ) n += v;
  return n;
}

/// Sparse superposition of Fock basis kets. Immutable; iteration follows the
/// lexicographic order of occupation vectors.
class FockState {
 public:
  using Terms = std::map<Occupation, cplx>;

  FockState() = default;

  FockState(RegisterPtr reg, Terms terms, bool normalized)
      : reg_(std::move(reg)), terms_(std::move(terms)), normalized_(normalized) {
    if (!reg_) throw std::invalid_argument("FockState: null register");
    for (const auto& [occ, amp] : terms_) {
      if (occ.size() != reg_->size()) throw std::invalid_argument("FockState: occupation length mismatch");
      if (photon_count(occ) > kPhotonCutoff) {
        throw std::invalid_argument("FockState: photon cutoff " + std::to_string(kPhotonCutoff) + " exceeded");
      }
    }
    if (normalized_ && std::abs(norm_squared() - 1.0) > 1e-10) {
      throw InvariantViolation("FockState: flagged normalized but norm^2 = " + std::to_string(norm_squared()));
    }
  }

  static FockState vacuum(RegisterPtr reg) {
    const auto m = reg->size();
    return FockState(std::move(reg), Terms{{Occupation(m, 0), cplx{1.0, 0.0}}}, true);
  }

  const ModeRegister& reg() const { return *reg_; }
  const RegisterPtr& reg_ptr() const { return reg_; }
  const Terms& terms() const { return terms_; }
  bool is_normalized() const { return normalized_; }
  bool empty() const { return terms_.empty(); }

  cplx amplitude(const Occupation& occ) const {
    auto it = terms_.find(occ);
    return it == terms_.end() ? cplx{} : it->second;
  }

  double norm_squared() const {
    double s = 0.0;
    for (const auto& [occ, amp] : terms_) s += std::norm(amp);
    return s;
  }

  int max_photons() const {
    int n = 0;
    for (const auto& [occ, amp] : terms_) n = std::max(n, photon_count(occ));
    return n;
  }

  /// Scaled copy with unit norm; throws InvariantViolation on a null state.
  FockState normalized() const {
    const double n2 = norm_squared();
    if (n2 <= 0.0) throw InvariantViolation("FockState: cannot normalize a null state");
    Terms t;
    const double s = 1.0 / std::sqrt(n2);
    for (const auto& [occ, amp] : terms_) t.emplace(occ, amp * s);
    return FockState(reg_, std::move(t), true);
  }

  FockState scaled(cplx factor) const {
    Terms t;
    for (const auto& [occ, amp] : terms_) t.emplace(occ, amp * factor);
    return FockState(reg_, std::move(t), false);
  }

 private:
  RegisterPtr reg_;
  Terms terms_;
  bool normalized_ = false;
};

namespace detail {

inline void prune(FockState::Terms& t) {
  std::erase_if(t, [](const auto& kv) { return std::abs(kv.second) < kPruneThreshold; });
}

inline double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// Expands prod_j (sum_k U_kj a_k^dag)^{n_j} |0> / sqrt(prod_j n_j!) into
// normalized output kets, one creation operator at a time.
inline std::vector<std::pair<Occupation, cplx>> expand_creation_product(const Matrix& u,
                                                                        const Occupation& in) {
  const auto n = static_cast<std::size_t>(u.rows());
  std::map<Occupation, cplx> poly{{Occupation(n, 0), cplx{1.0, 0.0}}};
  double in_norm = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    in_norm *= factorial(in[j]);
    for (int rep = 0; rep < in[j]; ++rep) {
      std::map<Occupation, cplx> next;
      for (const auto& [occ, c] : poly) {
        for (std::size_t k = 0; k < n; ++k) {
          const cplx ukj = u(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
          if (ukj == cplx{}) continue;
          Occupation o = occ;
          ++o[k];
          next[o] += c * ukj;
        }
      }
      poly = std::move(next);
    }
  }
  std::vector<std::pair<Occupation, cplx>> out;
  out.reserve(poly.size());
  for (const auto& [occ, c] : poly) {
    double out_norm = 1.0;
    for (auto m : occ) out_norm *= factorial(m);
    const cplx amp = c * std::sqrt(out_norm / in_norm);
    if (std::abs(amp) >= kPruneThreshold) out.emplace_back(occ, amp);
  }
  return out;
}

inline std::vector<std::size_t> indices_of(const ModeRegister& reg, std::span<const ModeLabel> labels) {
  std::vector<std::size_t> idx;
  idx.reserve(labels.size());
  for (const auto& l : labels) idx.push_back(reg.index_of(l));
  auto sorted = idx;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("repeated mode label in target list");
  }
  return idx;
}

}  // namespace detail

/// Single-term normalized basis state. Throws std::out_of_range for an unknown
/// label and std::invalid_argument when the cutoff is exceeded.
inline FockState make_fock(RegisterPtr reg, std::span<const std::pair<ModeLabel, int>> placements) {
  Occupation occ(reg->size(), 0);
  int total = 0;
  for (const auto& [label, count] : placements) {
    if (count < 0) throw std::invalid_argument("make_fock: negative photon count");
    occ[reg->index_of(label)] += static_cast<std::uint8_t>(count);
    total += count;
  }
  if (total > kPhotonCutoff) throw std::invalid_argument("make_fock: photon cutoff exceeded");
  return FockState(std::move(reg), FockState::Terms{{occ, cplx{1.0, 0.0}}}, true);
}

inline FockState make_fock(RegisterPtr reg, std::initializer_list<std::pair<ModeLabel, int>> placements) {
  return make_fock(std::move(reg), std::span<const std::pair<ModeLabel, int>>(placements.begin(), placements.size()));
}

/// Linear combination of states sharing one register.
inline FockState superpose(std::span<const std::pair<cplx, FockState>> terms, bool renormalize = false) {
  if (terms.empty()) throw std::invalid_argument("superpose: no terms");
  const RegisterPtr& reg = terms.front().second.reg_ptr();
  FockState::Terms acc;
  for (const auto& [coef, st] : terms) {
    if (st.reg_ptr() != reg && !(st.reg() == *reg)) throw std::invalid_argument("superpose: register mismatch");
    for (const auto& [occ, amp] : st.terms()) acc[occ] += coef * amp;
  }
  detail::prune(acc);
  FockState out(reg, std::move(acc), false);
  return renormalize ? out.normalized() : out;
}

inline FockState superpose(std::initializer_list<std::pair<cplx, FockState>> terms, bool renormalize = false) {
  return superpose(std::span<const std::pair<cplx, FockState>>(terms.begin(), terms.size()), renormalize);
}

/// Single-photon wavefunction: coefficients on register mode indices.
using PhotonMode = std::vector<std::pair<std::size_t, cplx>>;

/// Applies sum_i c_i a_i^dag. The result is left unnormalized.
inline FockState create_photon(const FockState& state, const PhotonMode& mode) {
  FockState::Terms acc;
  for (const auto& [occ, amp] : state.terms()) {
    for (const auto& [idx, c] : mode) {
      if (c == cplx{}) continue;
      Occupation o = occ;
      const double n = o.at(idx);
      o[idx] += 1;
      if (photon_count(o) > kPhotonCutoff) throw std::invalid_argument("create_photon: photon cutoff exceeded");
      acc[o] += amp * c * std::sqrt(n + 1.0);
    }
  }
  detail::prune(acc);
  return FockState(state.reg_ptr(), std::move(acc), false);
}

/// Maps each creation operator on targets[j] to sum_k U_kj times the creation
/// operator on targets[k]. Norm and photon number are preserved.
inline FockState apply_mode_unitary(const ModeUnitary& u, std::span<const std::size_t> targets,
                                    const FockState& state) {
  if (static_cast<std::size_t>(u.size()) != targets.size()) {
    throw std::invalid_argument("apply_mode_unitary: unitary side does not match target count");
  }
  const std::size_t nt = targets.size();
  std::map<Occupation, std::vector<std::pair<Occupation, cplx>>> cache;
  FockState::Terms acc;
  Occupation sub(nt);
  for (const auto& [occ, amp] : state.terms()) {
    bool any = false;
    for (std::size_t j = 0; j < nt; ++j) {
      sub[j] = occ.at(targets[j]);
      any = any || sub[j] != 0;
    }
    if (!any) {
      acc[occ] += amp;
      continue;
    }
    auto it = cache.find(sub);
    if (it == cache.end()) it = cache.emplace(sub, detail::expand_creation_product(u.matrix(), sub)).first;
    for (const auto& [out_sub, c] : it->second) {
      Occupation o = occ;
      for (std::size_t k = 0; k < nt; ++k) o[targets[k]] = out_sub[k];
      acc[o] += amp * c;
    }
  }
  detail::prune(acc);
  double after = 0.0;
  for (const auto& [occ, amp] : acc) after += std::norm(amp);
  const double before = state.norm_squared();
  if (std::abs(after - before) > 1e-10 * std::max(1.0, before)) {
    throw InvariantViolation("apply_mode_unitary: norm changed from " + std::to_string(before) + " to " +
                             std::to_string(after));
  }
  return FockState(state.reg_ptr(), std::move(acc), state.is_normalized());
}

inline FockState apply_mode_unitary(const ModeUnitary& u, std::span<const ModeLabel> targets,
                                    const FockState& state) {
  const auto idx = detail::indices_of(state.reg(), targets);
  return apply_mode_unitary(u, std::span<const std::size_t>(idx), state);
}

inline FockState apply_mode_unitary(const ModeUnitary& u, std::initializer_list<ModeLabel> targets,
                                    const FockState& state) {
  return apply_mode_unitary(u, std::span<const ModeLabel>(targets.begin(), targets.size()), state);
}

/// Result of conditioning on a click pattern.
struct PostSelection {
  double probability = 0.0;
  /// Component on the surviving modes; renormalized when `valid`.
  FockState conditional;
  bool valid = false;
};

namespace detail {

struct PatternSplit {
  std::vector<std::size_t> pattern, discard, survivors;
  RegisterPtr survivor_reg;
};

inline PatternSplit split_modes(const ModeRegister& reg, std::span<const ModeLabel> pattern,
                                std::span<const ModeLabel> discard) {
  PatternSplit s;
  s.pattern = indices_of(reg, pattern);
  s.discard = indices_of(reg, discard);
  std::vector<bool> used(reg.size(), false);
  for (auto i : s.pattern) used[i] = true;
  for (auto i : s.discard) {
    if (used[i]) throw std::invalid_argument("post-selection: pattern and discard modes overlap");
    used[i] = true;
  }
  std::vector<ModeLabel> keep;
  for (std::size_t i = 0; i < reg.size(); ++i) {
    if (!used[i]) {
      s.survivors.push_back(i);
      keep.push_back(reg.label(i));
    }
  }
  s.survivor_reg = make_register(std::move(keep));
  return s;
}

}  // namespace detail

/// Unnormalized component with exactly one photon in every pattern mode and
/// none in the discard modes, expressed on the surviving modes.
inline FockState project_pattern(const FockState& state, std::span<const ModeLabel> pattern,
                                 std::span<const ModeLabel> discard) {
  const auto split = detail::split_modes(state.reg(), pattern, discard);
  FockState::Terms acc;
  for (const auto& [occ, amp] : state.terms()) {
    bool ok = true;
    for (auto i : split.pattern) ok = ok && occ[i] == 1;
    for (auto i : split.discard) ok = ok && occ[i] == 0;
    if (!ok) continue;
    Occupation rest;
    rest.reserve(split.survivors.size());
    for (auto i : split.survivors) rest.push_back(occ[i]);
    acc[rest] += amp;
  }
  return FockState(split.survivor_reg, std::move(acc), false);
}

inline PostSelection post_select_pattern(const FockState& state, std::span<const ModeLabel> pattern,
                                         std::span<const ModeLabel> discard) {
  FockState comp = project_pattern(state, pattern, discard);
  PostSelection ps;
  ps.probability = comp.norm_squared();
  if (ps.probability > 0.0) {
    ps.conditional = comp.normalized();
    ps.valid = true;
  } else {
    ps.conditional = FockState(comp.reg_ptr(), {}, false);
  }
  return ps;
}

/// d x d density matrix: Hermitian, unit trace, positive semidefinite.
class DensityOperator {
 public:
  DensityOperator() = default;

  explicit DensityOperator(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("DensityOperator: matrix is not square");
    if (!is_hermitian(m_, 1e-10)) throw InvariantViolation("DensityOperator: not Hermitian");
    if (std::abs(m_.trace() - cplx{1.0, 0.0}) > 1e-10) throw InvariantViolation("DensityOperator: trace != 1");
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9) throw InvariantViolation("DensityOperator: negative eigenvalue");
  }

  static DensityOperator pure(const Vector& psi) {
    const Vector v = psi / psi.norm();
    return DensityOperator(v * v.adjoint());
  }

  static DensityOperator maximally_mixed(Eigen::Index d) {
    return DensityOperator(Matrix::Identity(d, d) / static_cast<double>(d));
  }

  const Matrix& matrix() const { return m_; }
  Eigen::Index dimension() const { return m_.rows(); }

 private:
  Matrix m_;
};

/// Logical density matrix of a single photon spread over `level_modes`:
/// level k is one photon in the (port, level) of level_modes[k], any internal
/// index. Internal labels and all other modes are traced out.
inline DensityOperator reduce_to_qudit(const FockState& state, std::span<const ModeLabel> level_modes) {
  const auto& reg = state.reg();
  const auto d = static_cast<Eigen::Index>(level_modes.size());
  // level of each register mode, or -1
  std::vector<int> level_of(reg.size(), -1);
  for (std::size_t i = 0; i < reg.size(); ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      const auto& lm = level_modes[static_cast<std::size_t>(k)];
      if (reg.label(i).port == lm.port && reg.label(i).level == lm.level) level_of[i] = static_cast<int>(k);
    }
  }
  for (Eigen::Index k = 0; k < d; ++k) {
    if (std::find(level_of.begin(), level_of.end(), static_cast<int>(k)) == level_of.end()) {
      throw std::out_of_range("reduce_to_qudit: no mode for level " + to_string(level_modes[static_cast<std::size_t>(k)]));
    }
  }
  // environment key: occupation with the logical photon removed, plus its internal index
  std::map<std::pair<Occupation, int>, Vector> groups;
  double bad = 0.0, total = 0.0;
  for (const auto& [occ, amp] : state.terms()) {
    total += std::norm(amp);
    int in_span = 0;
    std::size_t where = 0;
    for (std::size_t i = 0; i < occ.size(); ++i) {
      if (level_of[i] >= 0 && occ[i] > 0) {
        in_span += occ[i];
        where = i;
      }
    }
    if (in_span != 1) {
      bad += std::norm(amp);
      continue;
    }
    Occupation env = occ;
    env[where] = 0;
    auto key = std::make_pair(std::move(env), reg.label(where).internal);
    auto it = groups.find(key);
    if (it == groups.end()) it = groups.emplace(key, Vector::Zero(d)).first;
    it->second(level_of[where]) += amp;
  }
  if (bad > 1e-9 * std::max(1.0, total)) {
    throw InvariantViolation("reduce_to_qudit: state does not hold exactly one photon in the level modes");
  }
  Matrix rho = Matrix::Zero(d, d);
  for (const auto& [key, v] : groups) rho += v * v.adjoint();
  const double tr = rho.trace().real();
  if (tr <= 0.0) throw InvariantViolation("reduce_to_qudit: empty state");
  rho /= tr;
  rho = 0.5 * (rho + rho.adjoint());
  return DensityOperator(std::move(rho));
}

inline DensityOperator reduce_to_qudit(const FockState& state, std::initializer_list<ModeLabel> level_modes) {
  return reduce_to_qudit(state, std::span<const ModeLabel>(level_modes.begin(), level_modes.size()));
}

}  // namespace hdtele
