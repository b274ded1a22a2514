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

// Ancilla-assisted high-dimensional Bell-state measurement and the
// teleportation pipeline built on it.
//
// Photons: a (teleportee), b and c (shared maximally entangled pair, c is
// Bob's), and N-2 ancillas in the uniform superposition. Every photon is
// path-encoded in levels 0..N-1. A Fourier multiport mixes the ports
// {a, b, ancillas} level by level; a detector sits on every (output port,
// level). In the main variant an expanded (N+1)-level unitary acts on b
// before the multiport and its extra level is never detected; in the
// feed-forward variant that unitary moves to Bob, wrapped in pattern-specific
// phase corrections.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdtele/analysis.hpp"
#include "hdtele/fock.hpp"
#include "hdtele/optics.hpp"
#include "hdtele/qudit.hpp"

namespace hdtele {

enum class Variant { main, feedforward };
enum class Elements { ideal, experimental };

inline const char* to_string(Variant v) { return v == Variant::main ? "main" : "feedforward"; }
inline const char* to_string(Elements e) { return e == Elements::ideal ? "ideal" : "experimental"; }

/// Expanded unitary on photon b's levels {0,1,2,3} (N = 3), frozen from
/// derive_expanded_unitary(3). Equal to J/2 - I, a real reflection.
inline const Matrix& u31_matrix() {
  static const Matrix m = [] {
    Matrix u(4, 4);
    u << -0.5, 0.5, 0.5, 0.5,
          0.5, -0.5, 0.5, 0.5,
          0.5, 0.5, -0.5, 0.5,
          0.5, 0.5, 0.5, -0.5;
    return u;
  }();
  return m;
}

inline ModeUnitary u31_embed() { return ModeUnitary(u31_matrix(), 1e-12); }

struct NetworkOptions {
  /// Horizontal reflectivity of the hybrid multiport's splitter, per level.
  /// Empty means 1/3 everywhere. Only used with Elements::experimental.
  std::vector<double> splitter_reflectivity;
  /// Extra phase on the |kk>_bc term of the shared pair, per level.
  std::vector<double> resource_phases;
  /// Internal (spectral) dimension of every mode.
  int internal_dim = 1;
  /// Internal wavefunction per photon role ("a", "b", "c", "x"); default |0>.
  std::map<std::string, Vector> internal_states;
};

/// Logical names for the network's modes.
struct ModeDictionary {
  int dimension = 3;
  std::string port_a, port_b, port_c;
  std::vector<std::string> ancilla_ports;
  /// multiport input ports in Fourier order (a, b, ancillas)
  std::vector<std::string> input_ports;
  /// logical output ports, e.g. a', b', x'
  std::vector<std::string> output_ports;
  /// detector name ("a'0") -> watched modes, one per internal index
  std::map<std::string, std::vector<ModeLabel>> detectors;
  /// Bob's logical levels (internal index 0), plus the extra level when present
  std::vector<ModeLabel> bob;
  std::optional<ModeLabel> bob_extra;
  /// modes no detector watches
  std::vector<ModeLabel> undetected;

  static std::string detector_name(const std::string& out_port, int level) {
    return out_port + std::to_string(level);
  }
};

/// Bob's feed-forward operation for one click pattern.
struct BobCorrection {
  /// d x d operator applied to Bob's logical levels (a contraction)
  Matrix op;
  /// unitary actually applied: op itself, or its (d+1)-level dilation
  Matrix unitary;
  bool uses_extra_level = false;
  /// set when op is proportional to a Weyl operator X^m Z^n
  std::optional<BellIndex> weyl;
  /// op = diag(post) * B * diag(pre) with B the expanded-unitary block
  std::optional<Vector> pre_phases, post_phases;
};

/// Detectors that must each register one photon, with what they herald.
struct ClickPattern {
  std::string name;
  std::vector<std::string> detectors;
  std::vector<ModeLabel> modes;
  std::optional<BellIndex> heralded;
  BobCorrection correction;
};

struct TeleportOutcome {
  std::string pattern;
  /// probability of the click pattern alone
  double herald_probability = 0.0;
  /// herald probability times the survival of Bob's correction
  double success_probability = 0.0;
  DensityOperator bob_state;
  double fidelity_vs_input = 0.0;
};

class TeleportNetwork;
ModeUnitary derive_expanded_unitary(int n);

class TeleportNetwork {
 public:
  TeleportNetwork(int dimension, Variant variant, Elements elements, NetworkOptions options = {})
      : d_(dimension), variant_(variant), elements_(elements), opt_(std::move(options)) {
    if (d_ < 2 || d_ > 4) throw std::invalid_argument("TeleportNetwork: dimension must be 2, 3 or 4");
    if (elements_ == Elements::experimental && d_ != 3) {
      throw std::invalid_argument("TeleportNetwork: the hybrid multiport exists for N = 3 only");
    }
    if (opt_.internal_dim < 1) throw std::invalid_argument("TeleportNetwork: internal_dim must be >= 1");
    build_dictionary();
    build_register();
    if (variant_ == Variant::main) expanded_ = d_ == 3 ? u31_embed() : derive_expanded_unitary(d_);
    if (elements_ == Elements::experimental) {
      auto rh = opt_.splitter_reflectivity;
      if (rh.empty()) rh.assign(static_cast<std::size_t>(d_), 1.0 / 3.0);
      if (rh.size() != static_cast<std::size_t>(d_)) throw std::invalid_argument("splitter_reflectivity: one value per level");
      for (double r : rh) hybrid_.push_back(build_experimental_multiport(r));
    }
  }

  int dimension() const { return d_; }
  Variant variant() const { return variant_; }
  Elements elements() const { return elements_; }
  const NetworkOptions& options() const { return opt_; }
  const RegisterPtr& reg() const { return reg_; }
  const ModeDictionary& modes() const { return dict_; }

  FockState vacuum() const { return FockState::vacuum(reg_); }

  /// Single photon in `port` with level amplitudes `amps` and the internal
  /// wavefunction of `role`.
  PhotonMode photon_mode(const std::string& port, const Vector& amps, const std::string& role) const {
    const Vector u = internal_state(role);
    PhotonMode m;
    for (Eigen::Index k = 0; k < amps.size(); ++k) {
      for (int r = 0; r < opt_.internal_dim; ++r) {
        const cplx c = amps(k) * u(r);
        if (c != cplx{}) m.emplace_back(reg_->index_of({port, static_cast<int>(k), r}), c);
      }
    }
    return m;
  }

  PhotonMode uniform_ancilla_mode(const std::string& port) const {
    return photon_mode(port, Vector::Constant(d_, 1.0 / std::sqrt(static_cast<double>(d_))), "x");
  }

  /// Pair operator (1/sqrt d) sum_k e^{i theta_k} b_k^dag c_k^dag applied to `state`.
  FockState add_resource_pair(const FockState& state) const {
    std::vector<std::pair<cplx, FockState>> terms;
    const double s = 1.0 / std::sqrt(static_cast<double>(d_));
    for (int k = 0; k < d_; ++k) {
      const double theta = opt_.resource_phases.empty() ? 0.0 : opt_.resource_phases.at(static_cast<std::size_t>(k));
      FockState t = create_photon(state, photon_mode(dict_.port_b, unit(k), "b"));
      t = create_photon(t, photon_mode(dict_.port_c, unit(k), "c"));
      terms.emplace_back(s * std::polar(1.0, theta), std::move(t));
    }
    return superpose(terms);
  }

  FockState add_ancillas(const FockState& state) const {
    FockState s = state;
    for (const auto& p : dict_.ancilla_ports) s = create_photon(s, uniform_ancilla_mode(p));
    return s;
  }

  /// Teleportee in `input`, shared pair, ancillas; before any optics.
  FockState initial_state(const QuditState& input) const {
    if (input.dimension() != d_) throw std::invalid_argument("initial_state: input dimension mismatch");
    FockState s = create_photon(vacuum(), photon_mode(dict_.port_a, input.amplitudes(), "a"));
    s = add_resource_pair(s);
    s = add_ancillas(s);
    return FockState(s.reg_ptr(), s.terms(), std::abs(s.norm_squared() - 1.0) <= 1e-10);
  }

  /// a in |i>, b in |j>, ancillas, no Bob photon.
  FockState probe_state(int i, int j) const {
    FockState s = create_photon(vacuum(), photon_mode(dict_.port_a, unit(i), "a"));
    s = create_photon(s, photon_mode(dict_.port_b, unit(j), "b"));
    return add_ancillas(s);
  }

  /// Expanded unitary on b (main variant), then the multiport on every level.
  FockState propagate(const FockState& state) const {
    FockState s = state;
    if (variant_ == Variant::main) {
      for (int r = 0; r < opt_.internal_dim; ++r) {
        std::vector<ModeLabel> t;
        for (int k = 0; k <= d_; ++k) t.push_back({dict_.port_b, k, r});
        s = apply_mode_unitary(expanded_, std::span<const ModeLabel>(t), s);
      }
    }
    for (int k = 0; k < d_; ++k) {
      for (int r = 0; r < opt_.internal_dim; ++r) {
        if (elements_ == Elements::ideal) {
          std::vector<ModeLabel> t;
          for (const auto& p : dict_.input_ports) t.push_back({p, k, r});
          s = apply_mode_unitary(qft_, std::span<const ModeLabel>(t), s);
        } else {
          std::vector<ModeLabel> t;
          for (const auto& p : ExperimentalMultiport::kPhysical) t.push_back({p, k, r});
          s = apply_mode_unitary(hybrid_[static_cast<std::size_t>(k)].unitary, std::span<const ModeLabel>(t), s);
        }
      }
    }
    return s;
  }

  const ModeUnitary& expanded_unitary() const { return expanded_; }

  /// One pattern per output port: that port's detector on every level.
  std::vector<ClickPattern> clean_patterns() const {
    std::vector<ClickPattern> out;
    for (const auto& q : dict_.output_ports) out.push_back(make_pattern(std::vector<std::string>(static_cast<std::size_t>(d_), q)));
    return out;
  }

  /// Every choice of one output port per level, N^N patterns, level 0 most
  /// significant in output-port order.
  std::vector<ClickPattern> all_patterns() const {
    std::vector<ClickPattern> out;
    const auto nq = dict_.output_ports.size();
    std::size_t total = 1;
    for (int k = 0; k < d_; ++k) total *= nq;
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<std::string> ports(static_cast<std::size_t>(d_));
      std::size_t c = code;
      for (int k = d_ - 1; k >= 0; --k) {
        ports[static_cast<std::size_t>(k)] = dict_.output_ports[c % nq];
        c /= nq;
      }
      out.push_back(make_pattern(ports));
    }
    return out;
  }

  /// Modes that must stay empty for `pattern` to count: every other
  /// detector plus the unwatched modes.
  std::vector<ModeLabel> discard_for(const ClickPattern& pattern) const {
    std::vector<ModeLabel> out;
    for (const auto& [name, modes] : dict_.detectors) {
      const bool in_pattern = std::find(pattern.detectors.begin(), pattern.detectors.end(), name) != pattern.detectors.end();
      for (const auto& m : modes) {
        if (in_pattern && m.internal == 0) continue;
        out.push_back(m);
      }
    }
    out.insert(out.end(), dict_.undetected.begin(), dict_.undetected.end());
    return out;
  }

 private:
  Vector unit(int k) const {
    Vector v = Vector::Zero(d_);
    v(k) = 1.0;
    return v;
  }

  Vector internal_state(const std::string& role) const {
    auto it = opt_.internal_states.find(role);
    if (it == opt_.internal_states.end()) {
      Vector v = Vector::Zero(opt_.internal_dim);
      v(0) = 1.0;
      return v;
    }
    if (it->second.size() != opt_.internal_dim) throw std::invalid_argument("internal state dimension mismatch for " + role);
    return it->second;
  }

  ClickPattern make_pattern(const std::vector<std::string>& ports_per_level) const {
    ClickPattern p;
    p.name = "{";
    for (int k = 0; k < d_; ++k) {
      const auto det = ModeDictionary::detector_name(ports_per_level[static_cast<std::size_t>(k)], k);
      p.detectors.push_back(det);
      p.modes.push_back(dict_.detectors.at(det).front());
      p.name += (k ? " " : "") + det;
    }
    p.name += "}";
    p.correction.op = Matrix::Identity(d_, d_);
    p.correction.unitary = p.correction.op;
    return p;
  }

  void build_dictionary() {
    auto& m = dict_;
    m.dimension = d_;
    const bool hybrid = elements_ == Elements::experimental;
    m.port_a = hybrid ? "a.h" : "a";
    m.port_b = hybrid ? "b.h" : "b";
    m.port_c = "c";
    if (hybrid) {
      m.ancilla_ports = {"x.v"};
    } else if (d_ == 3) {
      m.ancilla_ports = {"x"};
    } else {
      for (int k = 1; k <= d_ - 2; ++k) m.ancilla_ports.push_back("x" + std::to_string(k));
    }
    if (hybrid) {
      m.input_ports = {"a.h", "b.h", "x.v"};
    } else {
      m.input_ports = {m.port_a, m.port_b};
      m.input_ports.insert(m.input_ports.end(), m.ancilla_ports.begin(), m.ancilla_ports.end());
    }
    std::vector<std::pair<std::string, std::string>> outputs;  // logical -> physical port
    if (hybrid) {
      const auto mp = build_experimental_multiport();
      for (const std::string q : {"a'", "b'", "x'"}) {
        outputs.emplace_back(q, ExperimentalMultiport::kPhysical[static_cast<std::size_t>(mp.outputs.at(q))]);
      }
      for (int idx : mp.unused_outputs) {
        for (int k = 0; k < d_; ++k)
          for (int r = 0; r < opt_.internal_dim; ++r)
            m.undetected.push_back({ExperimentalMultiport::kPhysical[static_cast<std::size_t>(idx)], k, r});
      }
    } else {
      for (const auto& p : m.input_ports) outputs.emplace_back((p == "a" || p == "b" ? p : p) + "'", p);
    }
    for (const auto& [logical, physical] : outputs) {
      m.output_ports.push_back(logical);
      for (int k = 0; k < d_; ++k) {
        auto& det = m.detectors[ModeDictionary::detector_name(logical, k)];
        for (int r = 0; r < opt_.internal_dim; ++r) det.push_back({physical, k, r});
      }
    }
    if (variant_ == Variant::main) {
      for (int r = 0; r < opt_.internal_dim; ++r) m.undetected.push_back({m.port_b, d_, r});
    }
    for (int k = 0; k < d_; ++k) m.bob.push_back({m.port_c, k, 0});
    if (variant_ == Variant::feedforward) m.bob_extra = ModeLabel{m.port_c, d_, 0};
  }

  void build_register() {
    std::vector<ModeLabel> labels;
    auto add_port = [&](const std::string& port, int levels) {
      for (int k = 0; k < levels; ++k)
        for (int r = 0; r < opt_.internal_dim; ++r) labels.push_back({port, k, r});
    };
    const bool hybrid = elements_ == Elements::experimental;
    const int b_levels = variant_ == Variant::main ? d_ + 1 : d_;
    if (hybrid) {
      for (const auto& p : ExperimentalMultiport::kPhysical) add_port(p, p == dict_.port_b ? b_levels : d_);
    } else {
      for (const auto& p : dict_.input_ports) add_port(p, p == dict_.port_b ? b_levels : d_);
    }
    add_port(dict_.port_c, variant_ == Variant::feedforward ? d_ + 1 : d_);
    reg_ = make_register(std::move(labels));
    qft_ = qft_multiport(static_cast<int>(dict_.input_ports.size()));
  }

  int d_;
  Variant variant_;
  Elements elements_;
  NetworkOptions opt_;
  ModeDictionary dict_;
  RegisterPtr reg_;
  ModeUnitary qft_;
  ModeUnitary expanded_;
  std::vector<ExperimentalMultiport> hybrid_;
};

/// Solves for the (N+1)-level unitary that turns the multiport's clean-pattern
/// conditioning into a Bell projection. With b sent straight into the
/// multiport, the clean pattern maps (a = i, b = l) to an amplitude G_il;
/// placing a block B on b gives the (a, b) map G B, and G B proportional to
/// the identity (the projection onto |psi_00>) fixes B = G^{-1} up to scale.
/// B is scaled to unit operator norm and completed to a unitary with one
/// extra level.
inline ModeUnitary derive_expanded_unitary(int n) {
  TeleportNetwork direct(n, Variant::feedforward, Elements::ideal);
  const auto pattern = direct.clean_patterns().front();
  const auto discard = direct.discard_for(pattern);
  Matrix g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < n; ++l) {
      const FockState out = direct.propagate(direct.probe_state(i, l));
      const FockState comp = project_pattern(out, pattern.modes, discard);
      g(i, l) = comp.amplitude(Occupation(comp.reg().size(), 0));
    }
  }
  Eigen::FullPivLU<Matrix> lu(g);
  if (!lu.isInvertible()) throw InvariantViolation("derive_expanded_unitary: conditioning map is singular");
  Matrix block = lu.inverse();
  Eigen::JacobiSVD<Matrix> svd(block);
  block /= svd.singularValues()(0);
  // global phase: first entry of the first column real
  if (std::abs(block(0, 0)) > 1e-12) block *= std::conj(block(0, 0)) / std::abs(block(0, 0)) * (block(0, 0).real() < 0 ? -1.0 : 1.0);
  return ModeUnitary(dilate_rank_one_contraction(block), 1e-10);
}

/// The linear functional a click pattern applies to the (a, b) pair: the
/// unnormalized vector phi with herald amplitude <phi|ij>, indexed i*d + j.
struct HeraldedProjection {
  Vector phi;
  double weight = 0.0;  // |phi|^2
  std::optional<BellIndex> bell;
  double bell_fidelity = 0.0;  // max over Bell states of |<psi_mn|phi>|^2 / |phi|^2

  /// rank-one conditional operator on the pair, unit trace
  Matrix operator_on_pair() const { return phi * phi.adjoint() / weight; }
};

/// Propagated probe states for every (a = i, b = j) basis input.
inline std::vector<FockState> propagate_probes(const TeleportNetwork& net) {
  const int d = net.dimension();
  std::vector<FockState> out;
  out.reserve(static_cast<std::size_t>(d * d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out.push_back(net.propagate(net.probe_state(i, j)));
  return out;
}

inline HeraldedProjection heralded_projection(const TeleportNetwork& net, const ClickPattern& pattern,
                                              const std::vector<FockState>& probes) {
  const int d = net.dimension();
  const auto discard = net.discard_for(pattern);
  HeraldedProjection h;
  h.phi = Vector::Zero(d * d);
  for (int idx = 0; idx < d * d; ++idx) {
    const FockState comp = project_pattern(probes[static_cast<std::size_t>(idx)], pattern.modes, discard);
    // Bob's modes survive and must be empty for a probe
    h.phi(idx) = std::conj(comp.amplitude(Occupation(comp.reg().size(), 0)));
  }
  h.weight = h.phi.squaredNorm();
  if (h.weight <= 1e-24) return h;
  for (int m = 0; m < d; ++m) {
    for (int n = 0; n < d; ++n) {
      const double f = std::norm(bell_vector({m, n}, d).dot(h.phi)) / h.weight;
      if (f > h.bell_fidelity) {
        h.bell_fidelity = f;
        if (f > 1.0 - 1e-9) h.bell = BellIndex{m, n};
      }
    }
  }
  return h;
}

/// Bob's (unnormalized) logical amplitudes inside a pattern-conditioned component.
inline Vector bob_amplitudes(const FockState& component, const ModeDictionary& dict) {
  const auto& reg = component.reg();
  const auto d = static_cast<Eigen::Index>(dict.bob.size());
  std::vector<std::size_t> idx;
  for (const auto& l : dict.bob) idx.push_back(reg.index_of(l));
  Vector v = Vector::Zero(d);
  for (const auto& [occ, amp] : component.terms()) {
    if (photon_count(occ) != 1) throw InvariantViolation("bob_amplitudes: expected exactly one surviving photon");
    for (Eigen::Index k = 0; k < d; ++k)
      if (occ[idx[static_cast<std::size_t>(k)]] == 1) v(k) += amp;
  }
  return v;
}

/// Bob's conditional map for `pattern`: column i is his unnormalized state
/// when the teleportee is |i>.
inline Matrix bob_transfer(const TeleportNetwork& net, const ClickPattern& pattern) {
  const int d = net.dimension();
  Matrix t(d, d);
  const auto discard = net.discard_for(pattern);
  for (int i = 0; i < d; ++i) {
    const FockState out = net.propagate(net.initial_state(QuditState::basis(d, i)));
    t.col(i) = bob_amplitudes(project_pattern(out, pattern.modes, discard), net.modes());
  }
  return t;
}

/// The unique (up to scale) operator C with C T proportional to the identity,
/// scaled to unit operator norm. Throws when T is singular, i.e. when no
/// correction can restore every input.
inline BobCorrection solve_correction(const TeleportNetwork& net, const Matrix& transfer) {
  const int d = net.dimension();
  Eigen::JacobiSVD<Matrix> svd(transfer);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0.0 || sv(d - 1) / sv(0) < 1e-9) throw InvariantViolation("solve_correction: pattern map is singular");
  BobCorrection c;
  c.op = transfer.inverse();
  c.op /= Eigen::JacobiSVD<Matrix>(c.op).singularValues()(0);
  // global phase: first nonzero entry of row 0 real positive
  for (int k = 0; k < d; ++k) {
    if (std::abs(c.op(0, k)) > 1e-12) {
      c.op *= std::conj(c.op(0, k)) / std::abs(c.op(0, k));
      break;
    }
  }
  if (is_unitary(c.op, 1e-9)) {
    c.unitary = c.op;
    for (int m = 0; m < d && !c.weyl; ++m)
      for (int n = 0; n < d && !c.weyl; ++n)
        if (std::abs((weyl_operator({m, n}, d).matrix().adjoint() * c.op).trace()) > d * (1.0 - 1e-9)) c.weyl = BellIndex{m, n};
    return c;
  }
  if (!net.modes().bob_extra) throw InvariantViolation("solve_correction: non-unitary correction needs Bob's extra level");
  c.uses_extra_level = true;
  c.unitary = dilate_rank_one_contraction(c.op);
  const Matrix block = derive_expanded_unitary(d).matrix().topLeftCorner(d, d);
  if (auto pe = phase_equivalence(c.op, block, 1e-9)) {
    c.post_phases = pe->out_phases.conjugate();
    c.pre_phases = pe->in_phases.conjugate();
  }
  return c;
}

/// Runs `input` through the network and evaluates every pattern.
inline std::vector<TeleportOutcome> teleport(const TeleportNetwork& net, const QuditState& input,
                                             const std::vector<ClickPattern>& patterns) {
  if (net.options().internal_dim != 1) throw std::invalid_argument("teleport: exact pipeline needs internal_dim 1");
  const auto& dict = net.modes();
  const FockState out = net.propagate(net.initial_state(input));
  std::vector<TeleportOutcome> results;
  for (const auto& p : patterns) {
    TeleportOutcome o;
    o.pattern = p.name;
    FockState comp = project_pattern(out, p.modes, net.discard_for(p));
    o.herald_probability = comp.norm_squared();
    if (o.herald_probability <= 0.0) throw InvariantViolation("teleport: pattern " + p.name + " never fires");
    std::vector<ModeLabel> bob = dict.bob;
    if (p.correction.uses_extra_level) bob.push_back(*dict.bob_extra);
    if (!p.correction.unitary.isIdentity(1e-14)) {
      comp = apply_mode_unitary(ModeUnitary(p.correction.unitary, 1e-9), std::span<const ModeLabel>(bob), comp);
    }
    if (dict.bob_extra) {
      const std::vector<ModeLabel> extra{*dict.bob_extra};
      comp = project_pattern(comp, {}, extra);
    }
    o.success_probability = comp.norm_squared();
    o.bob_state = reduce_to_qudit(comp.normalized(), dict.bob);
    o.fidelity_vs_input = fidelity(o.bob_state, input);
    results.push_back(std::move(o));
  }
  return results;
}

/// A network together with its solved click patterns.
class Teleporter {
 public:
  Teleporter(int dimension, Variant variant, Elements elements, NetworkOptions options = {})
      : net_(dimension, variant, elements, std::move(options)) {
    auto candidates = variant == Variant::main ? net_.clean_patterns() : net_.all_patterns();
    const auto probes = propagate_probes(net_);
    for (auto& p : candidates) {
      p.heralded = heralded_projection(net_, p, probes).bell;
      p.correction = solve_correction(net_, bob_transfer(net_, p));
      patterns_.push_back(std::move(p));
    }
  }

  const TeleportNetwork& network() const { return net_; }
  const std::vector<ClickPattern>& patterns() const { return patterns_; }

  std::vector<TeleportOutcome> run(const QuditState& input) const { return teleport(net_, input, patterns_); }

 private:
  TeleportNetwork net_;
  std::vector<ClickPattern> patterns_;
};

/// Before detection: the propagated four-photon state and its mode names.
struct Pipeline {
  FockState state;
  ModeDictionary modes;
};

inline Pipeline assemble_pipeline(const QuditState& input, Variant variant, Elements elements) {
  TeleportNetwork net(3, variant, elements);
  return {net.propagate(net.initial_state(input)), net.modes()};
}

/// Qutrit teleportation. Main: the three clean patterns, no correction.
/// Feed-forward: all 27 patterns with Bob's pattern-specific correction.
inline std::vector<TeleportOutcome> run_teleport(const QuditState& input, Variant variant, Elements elements) {
  if (input.dimension() != 3) throw std::invalid_argument("run_teleport: input must be a qutrit");
  return Teleporter(3, variant, elements).run(input);
}

/// Patterns of the N-level scheme that herald a Bell projection, with the
/// Weyl correction each one needs.
inline std::vector<ClickPattern> bell_heralding_patterns(const TeleportNetwork& net) {
  const auto probes = propagate_probes(net);
  std::vector<ClickPattern> out;
  for (auto& p : net.all_patterns()) {
    const auto h = heralded_projection(net, p, probes);
    if (!h.bell) continue;
    p.heralded = h.bell;
    p.correction = solve_correction(net, bob_transfer(net, p));
    if (!p.correction.weyl) throw InvariantViolation("general_scheme: Bell herald without a Weyl correction");
    out.push_back(std::move(p));
  }
  return out;
}

/// General N in {2, 3, 4}: N - 2 ancillas and an (N+1)-level expanded unitary.
inline std::vector<TeleportOutcome> general_scheme(int n, const QuditState& input) {
  if (n < 2 || n > 4) throw std::invalid_argument("general_scheme: N must be 2, 3 or 4");
  if (input.dimension() != n) throw std::invalid_argument("general_scheme: input dimension must equal N");
  TeleportNetwork net(n, Variant::main, Elements::ideal);
  return teleport(net, input, bell_heralding_patterns(net));
}

}  // namespace hdtele
