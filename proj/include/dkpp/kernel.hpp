// Copyright 2026 The Authors.
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

#ifndef DKPP_KERNEL_HPP
#define DKPP_KERNEL_HPP

#include "core.hpp"
#include "spectral.hpp"
#include "subset.hpp"

#include <Eigen/Eigenvalues>

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace dkpp {

/// Relative threshold below which eigenvalues of a principal submatrix are
/// treated as exactly zero.
inline constexpr double kEigenvalueClamp = 1e-12;

/// A real symmetric positive-semidefinite N x N kernel matrix L.
template <typename Scalar = double>
class KernelMatrix {
 public:
  KernelMatrix() = default;

  /// Validates symmetry and positive semidefiniteness.
  explicit KernelMatrix(Matrix<Scalar> l) : l_(std::move(l)) {
    if (l_.rows() != l_.cols()) throw InvalidArgument("kernel matrix must be square");
    if (l_.rows() == 0) throw InvalidArgument("kernel matrix must be non-empty");
    if (!l_.allFinite()) throw InvalidArgument("kernel matrix has non-finite entries");
    for (Index i = 0; i < l_.rows(); ++i) {
      for (Index j = i + 1; j < l_.cols(); ++j) {
        const Scalar tol = Scalar(1e-12) * std::max<Scalar>(1, std::abs(l_(i, j)));
        if (std::abs(l_(i, j) - l_(j, i)) > tol) {
          throw InvalidArgument("kernel matrix is not symmetric at (" +
                                std::to_string(i) + "," + std::to_string(j) + ")");
        }
      }
    }
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(l_, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw EigenSolverError("eigensolver failed on kernel");
    const Scalar lo = es.eigenvalues().minCoeff();
    const Scalar hi = es.eigenvalues().maxCoeff();
    if (lo < -Scalar(1e-10) * std::max<Scalar>(hi, 1)) {
      throw InvalidArgument("kernel matrix is not positive semidefinite (min eigenvalue " +
                            std::to_string(double(lo)) + ")");
    }
  }

  /// L = V V^T, symmetrized exactly.
  static KernelMatrix from_factor(const Matrix<Scalar>& v) {
    Matrix<Scalar> l = v * v.transpose();
    l = (Scalar(0.5) * (l + l.transpose())).eval();
    return KernelMatrix(std::move(l));
  }

  Index dim() const { return l_.rows(); }
  const Matrix<Scalar>& matrix() const { return l_; }
  Scalar operator()(Index i, Index j) const { return l_(i, j); }

 private:
  Matrix<Scalar> l_;
};

/// Gaussian kernel over the rows of `points`:
/// L_ij = exp(-|x_i - x_j|^2 / (2 bandwidth^2)).
template <typename Scalar>
KernelMatrix<Scalar> gaussian_kernel(const Matrix<Scalar>& points, Scalar bandwidth) {
  if (points.rows() == 0) throw InvalidArgument("gaussian_kernel needs at least one point");
  if (!points.allFinite()) throw InvalidArgument("gaussian_kernel: non-finite coordinates");
  if (!(bandwidth > 0)) throw InvalidArgument("gaussian_kernel: bandwidth must be positive");
  const Index n = points.rows();
  Matrix<Scalar> l(n, n);
  const Scalar denom = Scalar(2) * bandwidth * bandwidth;
  for (Index i = 0; i < n; ++i) {
    l(i, i) = Scalar(1);
    for (Index j = i + 1; j < n; ++j) {
      l(i, j) = l(j, i) = std::exp(-(points.row(i) - points.row(j)).squaredNorm() / denom);
    }
  }
  return KernelMatrix<Scalar>(std::move(l));
}

/// Points of a side x side integer grid in the plane, row-major (item
/// r * side + c sits at (r, c)).
template <typename Scalar = double>
Matrix<Scalar> grid_points(Index side) {
  Matrix<Scalar> pts(side * side, 2);
  for (Index r = 0; r < side; ++r) {
    for (Index c = 0; c < side; ++c) {
      pts(r * side + c, 0) = Scalar(r);
      pts(r * side + c, 1) = Scalar(c);
    }
  }
  return pts;
}

/// L = G G^T / n with G an n x n standard normal matrix drawn from a
/// mt19937_64 seeded with `seed`, filled row by row.
template <typename Scalar = double>
KernelMatrix<Scalar> random_wishart_kernel(Index n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("random_wishart_kernel: n must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> normal(0, 1);
  Matrix<Scalar> g(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) g(i, j) = normal(rng);
  }
  return KernelMatrix<Scalar>::from_factor(g / std::sqrt(Scalar(n)));
}

template <typename Scalar>
Matrix<Scalar> principal_submatrix(const KernelMatrix<Scalar>& l, const Subset& a) {
  a.validate(l.dim());
  return l.matrix()(a.items(), a.items());
}

namespace detail {

template <typename Scalar>
Scalar clamp_threshold(Scalar max_eigenvalue) {
  return Scalar(kEigenvalueClamp) * std::max<Scalar>(max_eigenvalue, 1);
}

template <typename Scalar>
Scalar sum_phi(const Vector<Scalar>& eigenvalues, const SpectralFunction<Scalar>& phi) {
  const Scalar cut = clamp_threshold(eigenvalues.maxCoeff());
  Scalar total = 0;
  for (Index s = 0; s < eigenvalues.size(); ++s) {
    const Scalar mu = eigenvalues(s) < cut ? Scalar(0) : eigenvalues(s);
    const Scalar v = phi(mu);
    if (v == neg_inf<Scalar>()) return neg_inf<Scalar>();
    total += v;
  }
  return total;
}

}  // namespace detail

/// tr phi(X) for a symmetric matrix X: the sum of phi over its clamped
/// eigenvalues. The 0 x 0 matrix gives 0.
template <typename Scalar>
Scalar trace_phi(const Matrix<Scalar>& sub, const SpectralFunction<Scalar>& phi) {
  const Index k = sub.rows();
  if (k == 0) return Scalar(0);
  if (k == 1) {
    const Scalar mu = sub(0, 0) < detail::clamp_threshold(sub(0, 0)) ? Scalar(0) : sub(0, 0);
    return phi(mu);
  }
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw EigenSolverError("eigensolver did not converge on a " + std::to_string(k) + "x" +
                           std::to_string(k) + " principal submatrix");
  }
  return detail::sum_phi<Scalar>(es.eigenvalues(), phi);
}

/// tr phi(L[A]). Returns -inf exactly when some clamped eigenvalue is 0 and
/// phi(0) = -inf.
template <typename Scalar>
Scalar trace_phi(const KernelMatrix<Scalar>& l, const Subset& a,
                 const SpectralFunction<Scalar>& phi) {
  if (a.empty()) return Scalar(0);
  return trace_phi<Scalar>(principal_submatrix(l, a), phi);
}

/// phi'(X) for a symmetric matrix X, computed spectrally (same eigenvectors,
/// phi' applied to the clamped eigenvalues). This is the gradient of
/// tr phi(X) with respect to X.
template <typename Scalar>
Matrix<Scalar> phi_derivative_matrix(const Matrix<Scalar>& sub,
                                     const SpectralFunction<Scalar>& phi) {
  const Index k = sub.rows();
  if (k == 0) return Matrix<Scalar>(0, 0);
  const Matrix<Scalar> eye = Matrix<Scalar>::Identity(k, k);
  switch (phi.kind()) {
    case SpectralKind::Affine: return phi.b() * eye;
    case SpectralKind::Quadratic: return Scalar(2) * phi.a() * sub + phi.b() * eye;
    case SpectralKind::BoxCox:
      if (phi.lambda() == Scalar(1)) return eye;
      break;
    case SpectralKind::Log: break;
  }
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sub);
  if (es.info() != Eigen::Success) throw EigenSolverError("eigensolver did not converge");
  const Scalar cut = detail::clamp_threshold<Scalar>(es.eigenvalues().maxCoeff());
  Vector<Scalar> d(k);
  for (Index s = 0; s < k; ++s) {
    const Scalar mu = es.eigenvalues()(s) < cut ? Scalar(0) : es.eigenvalues()(s);
    d(s) = phi.derivative(mu);
  }
  const auto& u = es.eigenvectors();
  return u * d.asDiagonal() * u.transpose();
}

/// Writes N on the first line, then N rows of N values at 17 significant
/// digits.
template <typename Scalar>
void write_kernel(std::ostream& os, const KernelMatrix<Scalar>& l) {
  const auto& m = l.matrix();
  os << m.rows() << '\n' << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << m(i, j);
    }
    os << '\n';
  }
}

/// Reads a rows x cols block of whitespace-separated reals, one row per line.
template <typename Scalar>
Matrix<Scalar> read_matrix_rows(std::istream& is, Index rows, Index cols) {
  Matrix<Scalar> m(rows, cols);
  std::string line;
  for (Index i = 0; i < rows; ++i) {
    if (!std::getline(is, line)) {
      throw InvalidArgument("matrix file: expected " + std::to_string(rows) + " rows, got " +
                            std::to_string(i));
    }
    std::istringstream ls(line);
    for (Index j = 0; j < cols; ++j) {
      if (!(ls >> m(i, j))) {
        throw InvalidArgument("matrix file: row " + std::to_string(i) + " has fewer than " +
                              std::to_string(cols) + " values");
      }
    }
    std::string extra;
    if (ls >> extra) {
      throw InvalidArgument("matrix file: row " + std::to_string(i) + " has extra values");
    }
  }
  return m;
}

template <typename Scalar = double>
KernelMatrix<Scalar> read_kernel(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("kernel file is empty");
  std::istringstream hs(line);
  Index n = 0;
  std::string extra;
  if (!(hs >> n) || n < 1 || (hs >> extra)) {
    throw InvalidArgument("kernel file: first line must be a positive dimension");
  }
  return KernelMatrix<Scalar>(read_matrix_rows<Scalar>(is, n, n));
}

template <typename Scalar = double>
KernelMatrix<Scalar> load_kernel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open kernel file " + path);
  return read_kernel<Scalar>(in);
}

template <typename Scalar>
void save_kernel(const std::string& path, const KernelMatrix<Scalar>& l) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write kernel file " + path);
  write_kernel(out, l);
}

}  // namespace dkpp

#endif  // DKPP_KERNEL_HPP
