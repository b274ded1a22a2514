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

// Source, detector and interferometer imperfections: multi-pair emission,
// photon loss with threshold detectors, partial distinguishability, and
// splitting-ratio deviations of the hybrid multiport.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "hdtele/analysis.hpp"
#include "hdtele/teleport.hpp"

namespace hdtele {

struct NoiseParams {
  double p = 0.013;
  double P_d = 0.16;
  double v_same = 0.92;
  double v_cross = 0.82;
  double rH_deviation = 0.0;
  double phase_noise = 0.0;

  void validate() const {
    auto unit = [](double x, const char* name) {
      if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument(std::string("NoiseParams: ") + name + " must lie in [0, 1]");
    };
    unit(p, "p");
    unit(P_d, "P_d");
    unit(v_same, "v_same");
    unit(v_cross, "v_cross");
    if (!(rH_deviation >= 0.0 && rH_deviation <= 1.0 / 3.0)) throw std::invalid_argument("NoiseParams: rH_deviation must lie in [0, 1/3]");
    if (!(phase_noise >= 0.0)) throw std::invalid_argument("NoiseParams: phase_noise must be >= 0");
  }
};

namespace detail {

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
/// handled by exactly one worker, so results written per index are identical
/// for every thread count.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace detail

/// Independent stream seed for trial `index` of a run seeded with `seed`
/// (splitmix64 finalizer over the pair).
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// SPDC sources

enum class SourceKind { entangled3, pair2 };

/// Squared norm of (P^dag)^n / n! |0>: C(n+2, 2) / 3^n for the three-path
/// pair, 1 for a single pair mode.
inline double pair_term_weight(SourceKind kind, int n) {
  if (n < 0) throw std::invalid_argument("pair_term_weight: negative order");
  if (kind == SourceKind::pair2) return 1.0;
  return detail::binomial(n + 2, 2) / std::pow(3.0, n);
}

/// Probability mass beyond `truncation` pairs, as a fraction of the
/// untruncated series sum_n p^n w_n.
inline double spdc_truncation_tail(double p, SourceKind kind, int truncation) {
  double head = 0.0, total = 0.0;
  for (int n = 0; n < 400; ++n) {
    const double t = std::pow(p, n) * pair_term_weight(kind, n);
    total += t;
    if (n <= truncation) head += t;
    if (n > truncation && t < 1e-300) break;
  }
  return (total - head) / total;
}

/// Applies the pair-creation operator of `kind` once to `state` on the
/// network's modes: the shared pair on (b, c), or the teleportee on a with one
/// uniform ancilla photon per ancilla port.
inline FockState apply_pair_creation(const TeleportNetwork& net, const FockState& state, SourceKind kind,
                                     const QuditState& teleportee) {
  if (kind == SourceKind::entangled3) return net.add_resource_pair(state);
  const auto& dict = net.modes();
  FockState s = create_photon(state, net.photon_mode(dict.port_a, teleportee.amplitudes(), "a"));
  return net.add_ancillas(s);
}

/// The n-pair term (P^dag)^n / n! |0>, unnormalized, with `other_pairs` pairs
/// of the other source created on top.
inline FockState pair_sector(const TeleportNetwork& net, int n_entangled, int n_pair2, const QuditState& teleportee) {
  FockState s = net.vacuum();
  for (int k = 0; k < n_entangled; ++k) s = apply_pair_creation(net, s, SourceKind::entangled3, teleportee);
  for (int k = 0; k < n_pair2; ++k) s = apply_pair_creation(net, s, SourceKind::pair2, teleportee);
  const double norm = detail::factorial(n_entangled) * detail::factorial(n_pair2);
  return FockState(s.reg_ptr(), s.scaled(1.0 / norm).terms(), false);
}

/// Standalone source state |0> + sqrt(p) P^dag|0> + p (P^dag)^2/2 |0> + ...,
/// truncated at `truncation` pairs and renormalized. entangled3 lives on ports
/// b, c; pair2 on ports a (teleportee, default |0>) and x.
inline FockState spdc_source(double p, SourceKind kind, int truncation = 2,
                             std::optional<QuditState> teleportee = std::nullopt) {
  if (!(p >= 0.0 && p < 0.1)) throw std::invalid_argument("spdc_source: p must lie in [0, 0.1)");
  if (truncation < 0 || 2 * truncation > kPhotonCutoff) throw std::invalid_argument("spdc_source: truncation out of range");
  const QuditState input = teleportee.value_or(QuditState::basis(3, 0));
  if (input.dimension() != 3) throw std::invalid_argument("spdc_source: teleportee must be a qutrit");
  std::vector<ModeLabel> labels;
  const std::vector<std::string> ports = kind == SourceKind::entangled3 ? std::vector<std::string>{"b", "c"}
                                                                         : std::vector<std::string>{"a", "x"};
  for (const auto& port : ports)
    for (int k = 0; k < 3; ++k) labels.push_back({port, k, 0});
  const RegisterPtr reg = make_register(labels);
  auto level_mode = [&](const std::string& port, const Vector& amps) {
    PhotonMode m;
    for (int k = 0; k < 3; ++k)
      if (amps(k) != cplx{}) m.emplace_back(reg->index_of({port, k, 0}), amps(k));
    return m;
  };
  auto create_pair = [&](const FockState& s) {
    if (kind == SourceKind::pair2) {
      return create_photon(create_photon(s, level_mode("a", input.amplitudes())),
                           level_mode("x", Vector::Constant(3, 1.0 / std::sqrt(3.0))));
    }
    std::vector<std::pair<cplx, FockState>> terms;
    for (int k = 0; k < 3; ++k) {
      Vector e = Vector::Zero(3);
      e(k) = 1.0;
      terms.emplace_back(1.0 / std::sqrt(3.0), create_photon(create_photon(s, level_mode("b", e)), level_mode("c", e)));
    }
    return superpose(terms);
  };
  std::vector<std::pair<cplx, FockState>> series;
  FockState term = FockState::vacuum(reg);
  for (int n = 0; n <= truncation; ++n) {
    if (n > 0) term = create_pair(term).scaled(1.0 / n);
    series.emplace_back(std::pow(p, 0.5 * n), term);
  }
  return superpose(series, true);
}

// ---------------------------------------------------------------------------
// Loss and threshold detection

/// One branch of the loss channel: photons removed per mode, its probability,
/// and the normalized surviving state.
struct LossRecord {
  Occupation lost;
  double probability = 0.0;
  FockState state;
};

/// Every photon in mode m independently survives with probability
/// efficiency[m]. Enumerates all loss records exactly.
inline std::vector<LossRecord> apply_loss(const FockState& state, const std::vector<double>& efficiency) {
  const auto n_modes = state.reg().size();
  if (efficiency.size() != n_modes) throw std::invalid_argument("apply_loss: one efficiency per mode");
  for (double e : efficiency)
    if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("apply_loss: efficiency must lie in [0, 1]");
  std::map<Occupation, FockState::Terms> branches;
  for (const auto& [occ, amp] : state.terms()) {
    Occupation lost(n_modes, 0);
    while (true) {
      double weight = 1.0;
      Occupation kept = occ;
      for (std::size_t m = 0; m < n_modes; ++m) {
        const int n = occ[m], l = lost[m];
        weight *= detail::binomial(n, l) * std::pow(efficiency[m], n - l) * std::pow(1.0 - efficiency[m], l);
        kept[m] = static_cast<std::uint8_t>(n - l);
      }
      if (weight > 0.0) branches[lost][kept] += amp * std::sqrt(weight);
      std::size_t m = 0;
      for (; m < n_modes; ++m) {
        if (lost[m] < occ[m]) {
          ++lost[m];
          break;
        }
        lost[m] = 0;
      }
      if (m == n_modes) break;
    }
  }
  std::vector<LossRecord> out;
  const double total = state.norm_squared();
  for (auto& [lost, terms] : branches) {
    FockState branch(state.reg_ptr(), std::move(terms), false);
    const double prob = branch.norm_squared();
    if (prob <= 0.0) continue;
    out.push_back({lost, prob / total, branch.normalized()});
  }
  return out;
}

inline std::vector<LossRecord> apply_loss(const FockState& state, double efficiency) {
  return apply_loss(state, std::vector<double>(state.reg().size(), efficiency));
}

/// Probability that a threshold detector fires on n incident photons.
inline double click_probability(int n, double efficiency) { return 1.0 - std::pow(1.0 - efficiency, n); }

/// Photon-number distribution over groups of modes (one group per detector).
/// Keys hold the photon count per group.
using CountHistogram = std::map<Occupation, double>;

inline CountHistogram count_histogram(const FockState& state, const std::vector<std::vector<ModeLabel>>& detectors) {
  std::vector<std::vector<std::size_t>> idx;
  for (const auto& group : detectors) {
    std::vector<std::size_t> g;
    for (const auto& l : group) g.push_back(state.reg().index_of(l));
    idx.push_back(std::move(g));
  }
  CountHistogram h;
  for (const auto& [occ, amp] : state.terms()) {
    Occupation key(detectors.size(), 0);
    for (std::size_t d = 0; d < idx.size(); ++d)
      for (auto m : idx[d]) key[d] = static_cast<std::uint8_t>(key[d] + occ[m]);
    h[key] += std::norm(amp);
  }
  return h;
}

enum class DetectorModel { threshold, number_resolving };

/// Probability that exactly the detectors in `fire` register (and all others
/// stay dark), each photon detected with probability `efficiency`. With
/// number-resolving detectors a firing detector must register exactly one
/// photon.
inline double exact_click_probability(const CountHistogram& h, const std::vector<bool>& fire, double efficiency,
                                      DetectorModel model = DetectorModel::threshold) {
  const double miss = 1.0 - efficiency;
  double total = 0.0;
  for (const auto& [counts, prob] : h) {
    double q = prob;
    for (std::size_t d = 0; d < counts.size() && q > 0.0; ++d) {
      const int n = counts[d];
      if (!fire[d]) {
        q *= std::pow(miss, n);
      } else if (model == DetectorModel::threshold) {
        q *= click_probability(n, efficiency);
      } else {
        q *= n * efficiency * std::pow(miss, n - 1);
      }
    }
    total += q;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Distinguishability

/// Vectors whose Gram matrix is `gram`, clipped to the nearest positive
/// semidefinite matrix with unit diagonal. Column i belongs to photon i; the
/// columns are lower triangular (photon i only uses internal modes 0..i).
inline Matrix gram_vectors(const Matrix& gram) {
  if (gram.rows() != gram.cols() || !is_hermitian(gram, 1e-12)) throw std::invalid_argument("gram_vectors: Gram matrix must be Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  Matrix g = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  const Eigen::VectorXd diag = g.diagonal().real().cwiseSqrt();
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) /= diag(i) * diag(j);
  const Eigen::Index n = g.rows();
  Matrix l = Matrix::Zero(n, n);  // g = l l^dag, row i is photon i
  for (Eigen::Index j = 0; j < n; ++j) {
    const double pivot = g(j, j).real() - l.row(j).head(j).squaredNorm();
    if (pivot <= 1e-14) continue;
    l(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const cplx known = (l.row(i).head(j).array() * l.row(j).head(j).conjugate().array()).sum();
      l(i, j) = (g(i, j) - known) / l(j, j);
    }
  }
  return l.transpose();
}

/// Internal wavefunctions for the photons meeting in the multiport: a and the
/// ancilla x share a crystal (HOM visibility v_same); b comes from the other
/// crystal (v_cross with both). Overlap magnitudes are sqrt(v). Bob's photon
/// never interferes and keeps internal mode 0.
inline std::map<std::string, Vector> internal_vectors(double v_same, double v_cross) {
  if (!(v_same >= 0.0 && v_same <= 1.0 && v_cross >= 0.0 && v_cross <= 1.0))
    throw std::invalid_argument("internal_vectors: visibilities must lie in [0, 1]");
  Matrix g = Matrix::Identity(3, 3);  // order a, x, b
  g(0, 1) = g(1, 0) = std::sqrt(v_same);
  g(0, 2) = g(2, 0) = g(1, 2) = g(2, 1) = std::sqrt(v_cross);
  const Matrix v = gram_vectors(g);
  Vector c = Vector::Zero(3);
  c(0) = 1.0;
  return {{"a", v.col(0)}, {"x", v.col(1)}, {"b", v.col(2)}, {"c", c}};
}

/// Gives photons `first` and `second` internal states with overlap sqrt(v);
/// grows the internal dimension to 2 if needed.
inline void set_internal_overlap(NetworkOptions& options, const std::string& first, const std::string& second, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("set_internal_overlap: v must lie in [0, 1]");
  options.internal_dim = std::max(options.internal_dim, 2);
  for (auto& [role, vec] : options.internal_states) {
    if (vec.size() < options.internal_dim) {
      Vector grown = Vector::Zero(options.internal_dim);
      grown.head(vec.size()) = vec;
      vec = grown;
    }
  }
  Vector u = Vector::Zero(options.internal_dim), w = Vector::Zero(options.internal_dim);
  u(0) = 1.0;
  w(0) = std::sqrt(v);
  w(1) = std::sqrt(1.0 - v);
  options.internal_states[first] = u;
  options.internal_states[second] = w;
}

// ---------------------------------------------------------------------------
// Hong-Ou-Mandel interference

/// Coincidence probability behind a balanced splitter for two photons whose
/// internal states overlap with |<u|w>|^2 = v, by Fock-space simulation.
inline double hom_coincidence(double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("hom_coincidence: v must lie in [0, 1]");
  std::vector<ModeLabel> labels;
  for (const std::string port : {"1", "2"})
    for (int r = 0; r < 2; ++r) labels.push_back({port, 0, r});
  const RegisterPtr reg = make_register(labels);
  const PhotonMode u{{reg->index_of({"1", 0, 0}), 1.0}};
  const PhotonMode w{{reg->index_of({"2", 0, 0}), std::sqrt(v)}, {reg->index_of({"2", 0, 1}), std::sqrt(1.0 - v)}};
  FockState s = create_photon(create_photon(FockState::vacuum(reg), u), w);
  const ModeUnitary bs = beam_splitter(kPi / 4.0, 0.0);
  for (int r = 0; r < 2; ++r) s = apply_mode_unitary(bs, {ModeLabel{"1", 0, r}, ModeLabel{"2", 0, r}}, s);
  double coincidence = 0.0;
  for (const auto& [occ, amp] : s.terms()) {
    const int n1 = occ[reg->index_of({"1", 0, 0})] + occ[reg->index_of({"1", 0, 1})];
    if (n1 == 1) coincidence += std::norm(amp);
  }
  return coincidence;
}

/// Coherence time for a filter of `bandwidth_nm`, scaled from 450 fs at 3 nm.
inline double coherence_time_fs(double bandwidth_nm) {
  if (!(bandwidth_nm > 0.0)) throw std::invalid_argument("coherence_time_fs: bandwidth must be positive");
  return 450.0 * 3.0 / bandwidth_nm;
}

struct HomScan {
  std::vector<double> delays_fs;
  std::vector<double> coincidence;  // normalized to the distinguishable rate
  double tau_c_fs = 0.0;
  double v_max = 0.0;
};

inline HomScan hom_scan(const std::vector<double>& delays_fs, double bandwidth_nm, double v_max) {
  if (!(v_max >= 0.0 && v_max <= 1.0)) throw std::invalid_argument("hom_scan: v_max must lie in [0, 1]");
  HomScan scan;
  scan.tau_c_fs = coherence_time_fs(bandwidth_nm);
  scan.v_max = v_max;
  scan.delays_fs = delays_fs;
  const double baseline = hom_coincidence(0.0);
  for (double t : delays_fs) {
    const double overlap = v_max * std::exp(-(t / scan.tau_c_fs) * (t / scan.tau_c_fs));
    scan.coincidence.push_back(hom_coincidence(overlap) / baseline);
  }
  return scan;
}

/// Symmetric delay grid over [-span, span] with 2 * half_points + 1 points.
inline std::vector<double> symmetric_delays(double span_fs, int half_points) {
  if (half_points < 1 || !(span_fs > 0.0)) throw std::invalid_argument("symmetric_delays: bad grid");
  std::vector<double> d;
  for (int k = -half_points; k <= half_points; ++k) d.push_back(span_fs * k / half_points);
  return d;
}

/// (baseline - dip) / baseline, baseline averaged over the two scan ends.
inline double hom_visibility(const HomScan& scan) {
  if (scan.coincidence.size() < 3) throw std::invalid_argument("hom_visibility: scan too short");
  const double baseline = 0.5 * (scan.coincidence.front() + scan.coincidence.back());
  const double dip = *std::min_element(scan.coincidence.begin(), scan.coincidence.end());
  return (baseline - dip) / baseline;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

/// Grid results; matrices are indexed [row axis][column axis]. A single-axis
/// sweep has one row.
struct SweepResult {
  std::vector<SweepAxis> axes;
  std::vector<std::vector<double>> fidelity;
  std::vector<std::vector<double>> success_rate;
  std::vector<std::vector<long>> trials;

  void check() const {
    const std::size_t rows = axes.size() == 2 ? axes[0].values.size() : 1;
    const std::size_t cols = axes.back().values.size();
    auto shape_ok = [&](const auto& m) {
      if (m.size() != rows) return false;
      return std::all_of(m.begin(), m.end(), [&](const auto& r) { return r.size() == cols; });
    };
    if (axes.empty() || axes.size() > 2 || !shape_ok(fidelity) || !shape_ok(success_rate) || !shape_ok(trials))
      throw InvariantViolation("SweepResult: matrix shapes do not match axes");
    for (const auto& r : fidelity)
      for (double f : r)
        if (!(f >= -1e-12 && f <= 1.0 + 1e-12)) throw InvariantViolation("SweepResult: fidelity outside [0, 1]");
  }
};

/// Four-fold events of the noisy main scheme (ideal multiport). Per MUB input
/// and per pair-number sector, photon-count histograms over the nine herald
/// detectors and Bob's three measurement detectors (his basis starts with the
/// input state) are computed once; any (p, P_d) point is then a cheap
/// reweighting.
class NoisyTeleportModel {
 public:
  struct Point {
    double fidelity = 0.0;
    double four_fold_rate = 0.0;
  };

  /// Pair-number sectors (entangled pairs, teleportee pairs) with at most
  /// kPhotonCutoff photons that can produce a four-fold event.
  static constexpr std::array<std::array<int, 2>, 3> kSectors{{{1, 1}, {2, 1}, {1, 2}}};

  NoisyTeleportModel(double v_same, double v_cross, int threads = 1,
                     DetectorModel detectors = DetectorModel::threshold)
      : detectors_(detectors) {
    NetworkOptions opt;
    opt.internal_dim = 3;
    opt.internal_states = internal_vectors(v_same, v_cross);
    net_.emplace(3, Variant::main, Elements::ideal, opt);
    const auto inputs = mub_states();
    histograms_.resize(inputs.size());
    detail::parallel_for(inputs.size(), threads, [&](std::size_t i) { histograms_[i] = build(inputs[i].state); });
  }

  Point evaluate(double p, double efficiency) const {
    if (!(p >= 0.0 && p < 0.1)) throw std::invalid_argument("NoisyTeleportModel: p must lie in [0, 0.1)");
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw std::invalid_argument("NoisyTeleportModel: P_d must lie in [0, 1]");
    const double z1 = 1.0 + p + pair_term_weight(SourceKind::entangled3, 2) * p * p;
    const double z2 = 1.0 + p + pair_term_weight(SourceKind::pair2, 2) * p * p;
    Point pt;
    for (const auto& per_input : histograms_) {
      double good = 0.0, all = 0.0;
      for (std::size_t s = 0; s < kSectors.size(); ++s) {
        const double w = std::pow(p, kSectors[s][0] + kSectors[s][1]) / (z1 * z2);
        for (int q = 0; q < 3; ++q) {
          for (int j = 0; j < 3; ++j) {
            std::vector<bool> fire(12, false);
            for (int k = 0; k < 3; ++k) fire[static_cast<std::size_t>(3 * q + k)] = true;
            fire[static_cast<std::size_t>(9 + j)] = true;
            const double prob = w * exact_click_probability(per_input[s], fire, efficiency, detectors_);
            all += prob;
            if (j == 0) good += prob;
          }
        }
      }
      pt.fidelity += all > 0.0 ? good / all : 0.0;
      pt.four_fold_rate += all;
    }
    pt.fidelity /= static_cast<double>(histograms_.size());
    pt.four_fold_rate /= static_cast<double>(histograms_.size());
    return pt;
  }

  const TeleportNetwork& network() const { return *net_; }

  /// Detector groups: a'0..a'2, b'0..b'2, x'0..x'2, then Bob's three outcomes.
  std::vector<std::vector<ModeLabel>> detector_groups() const {
    std::vector<std::vector<ModeLabel>> groups;
    const auto& dict = net_->modes();
    for (const auto& q : dict.output_ports)
      for (int k = 0; k < 3; ++k) groups.push_back(dict.detectors.at(ModeDictionary::detector_name(q, k)));
    for (int k = 0; k < 3; ++k) {
      std::vector<ModeLabel> g;
      for (int r = 0; r < net_->options().internal_dim; ++r) g.push_back({dict.port_c, k, r});
      groups.push_back(std::move(g));
    }
    return groups;
  }

  /// Sector state after the multiport and Bob's measurement rotation.
  FockState detected_sector_state(const QuditState& input, std::size_t sector) const {
    const auto& net = *net_;
    FockState s = net.propagate(pair_sector(net, kSectors.at(sector)[0], kSectors.at(sector)[1], input));
    const ModeUnitary rot = measurement_rotation(input);
    for (int r = 0; r < net.options().internal_dim; ++r) {
      s = apply_mode_unitary(rot, {ModeLabel{"c", 0, r}, ModeLabel{"c", 1, r}, ModeLabel{"c", 2, r}}, s);
    }
    return s;
  }

  /// Mode unitary sending the state psi to the first detector.
  static ModeUnitary measurement_rotation(const QuditState& psi) {
    Matrix basis = Matrix::Identity(psi.dimension(), psi.dimension());
    basis.col(0) = psi.amplitudes();
    Eigen::HouseholderQR<Matrix> qr(basis);
    const Matrix q = qr.householderQ();  // first column is psi up to phase
    return ModeUnitary(q.adjoint(), 1e-10);
  }

 private:
  std::vector<CountHistogram> build(const QuditState& input) const {
    std::vector<CountHistogram> out;
    const auto groups = detector_groups();
    for (std::size_t s = 0; s < kSectors.size(); ++s) out.push_back(count_histogram(detected_sector_state(input, s), groups));
    return out;
  }

  DetectorModel detectors_;
  std::optional<TeleportNetwork> net_;
  std::vector<std::vector<CountHistogram>> histograms_;
};

/// Average four-fold fidelity over the 12 MUB inputs on a (P_d, p) grid.
inline SweepResult fidelity_landscape(const NoisyTeleportModel& model, const std::vector<double>& pd_grid,
                                      const std::vector<double>& p_grid) {
  if (pd_grid.empty() || p_grid.empty()) throw std::invalid_argument("fidelity_landscape: empty grid");
  SweepResult r;
  r.axes = {{"P_d", pd_grid}, {"p", p_grid}};
  for (double pd : pd_grid) {
    std::vector<double> f, rate;
    for (double p : p_grid) {
      const auto pt = model.evaluate(p, pd);
      f.push_back(pt.fidelity);
      rate.push_back(pt.four_fold_rate);
    }
    r.fidelity.push_back(std::move(f));
    r.success_rate.push_back(std::move(rate));
    r.trials.emplace_back(p_grid.size(), 0L);
  }
  r.check();
  return r;
}

inline SweepResult fidelity_landscape(const std::vector<double>& pd_grid, const std::vector<double>& p_grid,
                                      const NoiseParams& base, int threads = 1,
                                      DetectorModel detectors = DetectorModel::threshold) {
  base.validate();
  if (pd_grid.empty() || p_grid.empty()) throw std::invalid_argument("fidelity_landscape: empty grid");
  return fidelity_landscape(NoisyTeleportModel(base.v_same, base.v_cross, threads, detectors), pd_grid, p_grid);
}

/// Least-squares slope of log(rate) against log(p).
inline double four_fold_slope(const NoisyTeleportModel& model, const std::vector<double>& p_values, double efficiency) {
  if (p_values.size() < 2) throw std::invalid_argument("four_fold_slope: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(p_values.size());
  for (double p : p_values) {
    const double x = std::log(p), y = std::log(model.evaluate(p, efficiency).four_fold_rate);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Per-trial outcome of the ideal-source pipeline with perturbed elements.
struct TrialOutcome {
  double mean_fidelity = 0.0;  // over the 12 MUB inputs
  double success_probability = 0.0;
};

/// Ideal sources through the hybrid multiport with the given per-level
/// reflectivities and resource phases; the three clean patterns, no
/// correction.
inline TrialOutcome perturbed_trial(const std::vector<double>& reflectivity, const std::vector<double>& resource_phases) {
  NetworkOptions opt;
  opt.splitter_reflectivity = reflectivity;
  opt.resource_phases = resource_phases;
  const TeleportNetwork net(3, Variant::main, Elements::experimental, opt);
  const auto patterns = net.clean_patterns();
  std::vector<Matrix> transfers;
  for (const auto& p : patterns) transfers.push_back(bob_transfer(net, p));
  TrialOutcome t;
  const auto inputs = mub_states();
  for (const auto& in : inputs) {
    const Vector& psi = in.state.amplitudes();
    double overlap = 0.0, total = 0.0;
    for (const auto& tq : transfers) {
      const Vector out = tq * psi;
      overlap += std::norm(psi.dot(out));
      total += out.squaredNorm();
    }
    t.mean_fidelity += overlap / total;
    t.success_probability += total;
  }
  t.mean_fidelity /= static_cast<double>(inputs.size());
  t.success_probability /= static_cast<double>(inputs.size());
  return t;
}

/// For every deviation d, `trials` draws r_k = 1/3 + d u_k with u_k uniform in
/// [-1, 1] per level (plus Gaussian resource phases of width
/// base.phase_noise). Trial i uses the same u and phase draws at every d.
inline SweepResult splitting_ratio_perturbation(const std::vector<double>& deviations, int trials, std::uint64_t seed,
                                                const NoiseParams& base = {}, int threads = 1) {
  base.validate();
  if (deviations.empty() || trials < 1) throw std::invalid_argument("splitting_ratio_perturbation: empty sweep");
  for (double d : deviations)
    if (!(d >= 0.0 && d < 1.0 / 3.0)) throw std::invalid_argument("splitting_ratio_perturbation: deviation must keep rH in (0, 1)");
  SweepResult r;
  r.axes = {{"rH_deviation", deviations}};
  r.fidelity.assign(1, {});
  r.success_rate.assign(1, {});
  r.trials.assign(1, {});
  const std::size_t n = static_cast<std::size_t>(trials);
  std::vector<std::array<double, 3>> u(n), phases(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(trial_seed(seed, i));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& x : u[i]) x = uni(rng);
    for (auto& x : phases[i]) x = gauss(rng);
  }
  for (double d : deviations) {
    std::vector<TrialOutcome> out(n);
    detail::parallel_for(n, threads, [&](std::size_t i) {
      std::vector<double> rh(3), ph(3);
      for (int k = 0; k < 3; ++k) {
        rh[static_cast<std::size_t>(k)] = 1.0 / 3.0 + d * u[i][static_cast<std::size_t>(k)];
        ph[static_cast<std::size_t>(k)] = base.phase_noise * phases[i][static_cast<std::size_t>(k)];
      }
      out[i] = perturbed_trial(rh, ph);
    });
    double f = 0.0, s = 0.0;
    for (const auto& t : out) {
      f += t.mean_fidelity;
      s += t.success_probability;
    }
    r.fidelity[0].push_back(f / static_cast<double>(n));
    r.success_rate[0].push_back(s / static_cast<double>(n));
    r.trials[0].push_back(trials);
  }
  r.check();
  return r;
}

// ---------------------------------------------------------------------------
// Entangled-source witness

/// Local measurement basis for witness observable `index` (order of
/// witness_observables()): columns are the outcome states, with eigenvalues.
struct LocalBasis {
  Matrix states;
  std::array<double, 3> eigenvalues{};
};

inline LocalBasis witness_basis(int index) {
  if (index < 0 || index > 6) throw std::out_of_range("witness_basis: index must be in [0, 6]");
  LocalBasis b;
  b.states = Matrix::Zero(3, 3);
  if (index == 6) {
    b.states = Matrix::Identity(3, 3);
    b.eigenvalues = {0.0, 0.0, 0.0};
    return b;
  }
  const std::array<std::array<int, 3>, 3> pairs = {{{0, 1, 2}, {0, 2, 1}, {1, 2, 0}}};
  const auto& pr = pairs[static_cast<std::size_t>(index / 2)];
  const cplx phase = index % 2 == 0 ? cplx{1.0} : kI;
  const double s = 1.0 / std::sqrt(2.0);
  b.states(pr[0], 0) = s;
  b.states(pr[1], 0) = s * phase;
  b.states(pr[0], 1) = s;
  b.states(pr[1], 1) = -s * phase;
  b.states(pr[2], 2) = 1.0;
  b.eigenvalues = {1.0, -1.0, 0.0};
  return b;
}

struct WitnessSimulation {
  std::array<double, 7> expectations{};
  double fidelity = 0.0;
  /// two-fold coincidence probability per pulse, per observable
  std::array<double, 7> coincidence_rate{};
};

/// The shared-pair source alone (multi-pair emission up to two pairs, loss,
/// threshold detectors) measured locally in each witness basis; expectations
/// come from two-fold coincidences (one click on each side). The three path
/// emissions of each photon overlap with magnitude sqrt(v_same), which damps
/// the |kk><ll| coherences by v_same.
inline WitnessSimulation simulate_source_witness(const NoiseParams& params,
                                                 DetectorModel detectors = DetectorModel::threshold) {
  params.validate();
  const int dim = 3;
  std::vector<ModeLabel> labels;
  for (const std::string port : {"b", "c"})
    for (int k = 0; k < 3; ++k)
      for (int r = 0; r < dim; ++r) labels.push_back({port, k, r});
  const RegisterPtr reg = make_register(labels);
  Matrix gram = Matrix::Constant(3, 3, std::sqrt(params.v_same));
  gram.diagonal().setOnes();
  const Matrix paths = gram_vectors(gram);  // column k: internal state of path k
  auto pair_op = [&](const FockState& s) {
    std::vector<std::pair<cplx, FockState>> terms;
    for (int k = 0; k < 3; ++k) {
      PhotonMode mb, mc;
      for (int r = 0; r < dim; ++r) {
        const cplx amp = paths(r, k);
        if (amp == cplx{}) continue;
        mb.emplace_back(reg->index_of({"b", k, r}), amp);
        mc.emplace_back(reg->index_of({"c", k, r}), amp);
      }
      terms.emplace_back(1.0 / std::sqrt(3.0), create_photon(create_photon(s, mb), mc));
    }
    return superpose(terms);
  };
  const FockState one = pair_op(FockState::vacuum(reg));
  const FockState two = pair_op(one).scaled(0.5);
  const double z = 1.0 + params.p + pair_term_weight(SourceKind::entangled3, 2) * params.p * params.p;
  WitnessSimulation w;
  for (int o = 0; o < 7; ++o) {
    const LocalBasis basis = witness_basis(o);
    const ModeUnitary rot(basis.states.adjoint(), 1e-12);
    std::vector<std::vector<ModeLabel>> groups;
    for (const std::string port : {"b", "c"}) {
      for (int k = 0; k < 3; ++k) {
        std::vector<ModeLabel> g;
        for (int r = 0; r < dim; ++r) g.push_back({port, k, r});
        groups.push_back(std::move(g));
      }
    }
    std::array<std::array<double, 3>, 3> joint{};
    for (const auto& [weight, sector] : {std::pair{params.p / z, &one}, std::pair{params.p * params.p / z, &two}}) {
      FockState s = *sector;
      for (const std::string port : {"b", "c"})
        for (int r = 0; r < dim; ++r)
          s = apply_mode_unitary(rot, {ModeLabel{port, 0, r}, ModeLabel{port, 1, r}, ModeLabel{port, 2, r}}, s);
      const CountHistogram h = count_histogram(s, groups);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          std::vector<bool> fire(6, false);
          fire[static_cast<std::size_t>(i)] = true;
          fire[static_cast<std::size_t>(3 + j)] = true;
          joint[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += weight * exact_click_probability(h, fire, params.P_d, detectors);
        }
      }
    }
    double total = 0.0, value = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double q = joint[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        total += q;
        value += o == 6 ? (i == j ? q : 0.0) : basis.eigenvalues[static_cast<std::size_t>(i)] * basis.eigenvalues[static_cast<std::size_t>(j)] * q;
      }
    }
    if (total <= 0.0) throw InvariantViolation("simulate_source_witness: no coincidences");
    w.expectations[static_cast<std::size_t>(o)] = value / total;
    w.coincidence_rate[static_cast<std::size_t>(o)] = total;
  }
  w.fidelity = entanglement_witness_fidelity(w.expectations);
  return w;
}

}  // namespace hdtele
