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

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hdtele {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Raised when a simulation invariant (norm, unitarity, photon number) is
/// violated. Distinct from argument errors so front ends can map it to its
/// own exit status.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double max_abs_entry(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool is_unitary(const Matrix& u, double tol = 1e-10) {
  if (u.rows() != u.cols()) return false;
  const Matrix gram = u.adjoint() * u - Matrix::Identity(u.rows(), u.cols());
  return max_abs_entry(gram) <= tol;
}

inline bool is_hermitian(const Matrix& m, double tol = 1e-10) {
  return m.rows() == m.cols() && max_abs_entry(m - m.adjoint()) <= tol;
}

/// exp(i 2 pi k / d)
inline cplx root_of_unity(int d, long k) {
  const double angle = 2.0 * kPi * static_cast<double>(k % d) / d;
  return std::polar(1.0, angle);
}

/// Square, unitary matrix acting on a set of optical modes.
class ModeUnitary {
 public:
  ModeUnitary() = default;

  /// Throws std::invalid_argument if `m` is not square and unitary within `tol`.
  explicit ModeUnitary(Matrix m, double tol = 1e-10) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) {
      throw std::invalid_argument("ModeUnitary: matrix is not square");
    }
    if (!is_unitary(m_, tol)) {
      throw std::invalid_argument("ModeUnitary: matrix is not unitary (deviation " +
                                  std::to_string(max_abs_entry(m_.adjoint() * m_ -
                                                               Matrix::Identity(m_.rows(), m_.cols()))) +
                                  ")");
    }
  }

  static ModeUnitary identity(Eigen::Index n) { return ModeUnitary(Matrix::Identity(n, n)); }

  const Matrix& matrix() const { return m_; }
  Eigen::Index size() const { return m_.rows(); }
  cplx operator()(Eigen::Index r, Eigen::Index c) const { return m_(r, c); }

  /// this * other, i.e. `other` acts first.
  ModeUnitary after(const ModeUnitary& other) const { return ModeUnitary(m_ * other.m_, 1e-9); }
  ModeUnitary adjoint() const { return ModeUnitary(m_.adjoint()); }

 private:
  Matrix m_;
};

/// Unit vector orthogonal to the columns of the isometry `v` (rows = cols + 1).
inline Vector orthogonal_complement_column(const Matrix& v) {
  Eigen::JacobiSVD<Matrix> svd(v.adjoint(), Eigen::ComputeFullV);
  Vector col = svd.matrixV().col(v.rows() - 1);
  // deterministic phase: largest-magnitude entry real positive
  Eigen::Index arg = 0;
  col.cwiseAbs().maxCoeff(&arg);
  col *= std::conj(col(arg)) / std::abs(col(arg));
  return col;
}

/// Minimal unitary dilation of a contraction whose defect I - C^dagger C has
/// rank at most one. Returns the (n+1)x(n+1) unitary whose top-left block is C.
/// Throws InvariantViolation when the defect has higher rank.
inline Matrix dilate_rank_one_contraction(const Matrix& c, double tol = 1e-9) {
  const Eigen::Index n = c.rows();
  const Matrix defect = Matrix::Identity(n, n) - c.adjoint() * c;
  Eigen::SelfAdjointEigenSolver<Matrix> es(defect);
  const auto& ev = es.eigenvalues();
  if (ev.minCoeff() < -tol) throw InvariantViolation("dilation: input is not a contraction");
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    if (ev(k) > tol) throw InvariantViolation("dilation: defect has rank > 1");
  }
  const double top = std::max(0.0, ev(n - 1));
  Vector row = std::sqrt(top) * es.eigenvectors().col(n - 1).conjugate();
  // fix the row's phase so that its first nonzero entry is real positive
  for (Eigen::Index k = 0; k < n; ++k) {
    if (std::abs(row(k)) > 1e-12) {
      row *= std::conj(row(k)) / std::abs(row(k));
      break;
    }
  }
  Matrix iso(n + 1, n);
  iso.topRows(n) = c;
  iso.row(n) = row.transpose();
  Matrix u(n + 1, n + 1);
  u.leftCols(n) = iso;
  u.col(n) = orthogonal_complement_column(iso);
  return u;
}

/// Haar-random n x n unitary (QR of a complex Gaussian matrix, phases of R
/// moved into Q).
template <class Rng>
Matrix random_unitary(int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("random_unitary: n must be >= 1");
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) z(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < n; ++k) {
    const double a = std::abs(r(k, k));
    if (a > 0.0) q.col(k) *= r(k, k) / a;
  }
  return q;
}

}  // namespace hdtele
