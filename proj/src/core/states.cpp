/*
 * Copyright 2026 The qtomo authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "core/states.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qtomo {

namespace {

void require_supported_dim(int dim, const char* where) {
  if (dim != 2 && dim != 4)
    throw DimensionError(std::string(where) + ": dim must be 2 or 4");
}

void require_same_dim(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim())
    throw DimensionError("state dimensions do not match");
}

}  // namespace

DensityMatrix DensityMatrix::validated(Matrix m) {
  if (m.rows() != m.cols()) throw DimensionError("density matrix not square");
  require_supported_dim(static_cast<int>(m.rows()), "DensityMatrix");
  const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermitianTol)
    throw DomainError("density matrix not Hermitian within tolerance");
  if (std::abs(m.trace().real() - 1.0) > kTraceTol ||
      std::abs(m.trace().imag()) > kTraceTol)
    throw DomainError("density matrix trace differs from 1");
  if (hermitian_eigenvalues(hermitize(m)).minCoeff() < -kPsdTol)
    throw DomainError("density matrix has a negative eigenvalue");
  return DensityMatrix(hermitize(std::move(m)));
}

PureState PureState::validated(Vector v) {
  require_supported_dim(static_cast<int>(v.size()), "PureState");
  if (std::abs(v.squaredNorm() - 1.0) > kHermitianTol)
    throw DomainError("state vector is not normalized");
  return PureState(std::move(v));
}

PureState PureState::normalized(const Vector& v) {
  const double n = v.norm();
  if (n < 1e-12) throw DomainError("cannot normalize a zero vector");
  return PureState(v / n);
}

Matrix bloch_matrix(const BlochVector& v) {
  Matrix m(2, 2);
  m << Complex(1.0 + v.s3, 0.0), Complex(v.s1, -v.s2), Complex(v.s1, v.s2),
      Complex(1.0 - v.s3, 0.0);
  return 0.5 * m;
}

DensityMatrix density_from_bloch(const BlochVector& v) {
  return DensityMatrix::validated(bloch_matrix(v));
}

BlochVector bloch_from_density(const DensityMatrix& rho) {
  if (rho.dim() != 2)
    throw DimensionError("bloch_from_density requires a qubit state");
  const Matrix& m = rho.mat();
  BlochVector v;
  v.s1 = 2.0 * m(1, 0).real();
  v.s2 = 2.0 * m(1, 0).imag();
  v.s3 = (m(0, 0) - m(1, 1)).real();
  return v;
}

double fidelity(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  require_same_dim(rho1, rho2);
  // [Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))]^2 evaluated as the squared
  // nuclear norm of sqrt(rho1) sqrt(rho2); summing singular values avoids
  // the sqrt of rounding-level eigenvalues near rank deficiency.
  const Matrix product = hermitian_sqrt(rho1.mat()) *
                         hermitian_sqrt(rho2.mat());
  Eigen::JacobiSVD<Matrix> svd(product);
  const double tr = svd.singularValues().sum();
  return std::clamp(tr * tr, 0.0, 1.0);
}

double bures_distance(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  const double f = fidelity(rho1, rho2);
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * std::sqrt(f)));
}

double bures_angle(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  return std::acos(std::sqrt(fidelity(rho1, rho2)));
}

double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  require_same_dim(rho1, rho2);
  const RealVector lam = hermitian_eigenvalues(rho1.mat() - rho2.mat());
  return 0.5 * lam.cwiseAbs().sum();
}

double hs_distance(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  require_same_dim(rho1, rho2);
  return (rho1.mat() - rho2.mat()).squaredNorm();
}

double relative_entropy(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  require_same_dim(rho1, rho2);
  constexpr double kSupportTol = 1e-10;
  Eigen::SelfAdjointEigenSolver<Matrix> es2(rho2.mat());
  // supp(rho1) within supp(rho2): rho1 must have no weight on rho2's kernel.
  for (Eigen::Index i = 0; i < es2.eigenvalues().size(); ++i) {
    if (es2.eigenvalues()(i) > kSupportTol) continue;
    const Vector v = es2.eigenvectors().col(i);
    const double weight = (v.adjoint() * rho1.mat() * v)(0, 0).real();
    if (weight > kSupportTol) return std::numeric_limits<double>::infinity();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es1(rho1.mat());
  double s = 0.0;
  for (Eigen::Index i = 0; i < es1.eigenvalues().size(); ++i) {
    const double lam = es1.eigenvalues()(i);
    if (lam > kEigenvalueClamp) s += lam * std::log(lam);
  }
  s -= (rho1.mat() * hermitian_log(rho2.mat())).trace().real();
  return std::max(0.0, s);
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  return DensityMatrix::trusted(kron(a.mat(), b.mat()));
}

double purity(const DensityMatrix& rho) {
  return (rho.mat() * rho.mat()).trace().real();
}

EigenSystem eigendecompose(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.mat());
  const Eigen::Index n = es.eigenvalues().size();
  EigenSystem out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

DensityMatrix project_to_physical(const Matrix& hermitian) {
  if (hermitian.rows() != hermitian.cols())
    throw DimensionError("project_to_physical requires a square matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(hermitian));
  RealVector lam = es.eigenvalues();
  const Eigen::Index n = lam.size();

  // Project the eigenvalue vector onto the probability simplex: find the
  // largest shift theta with sum_i max(lam_i - theta, 0) = 1.
  std::vector<double> sorted(lam.data(), lam.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += sorted[static_cast<size_t>(k)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (k + 1 == n || sorted[static_cast<size_t>(k + 1)] <= candidate) {
      theta = candidate;
      break;
    }
  }
  RealVector clipped = (lam.array() - theta).cwiseMax(0.0);
  clipped /= clipped.sum();  // removes the last-ulp drift
  return DensityMatrix::trusted(hermitize(
      es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint()));
}

DensityMatrix partial_trace_qubit(const DensityMatrix& rho, int keep) {
  if (rho.dim() != 4)
    throw DimensionError("partial_trace_qubit requires a two-qubit state");
  if (keep != 0 && keep != 1)
    throw DomainError("keep must be 0 or 1");
  const Matrix& m = rho.mat();
  Matrix out = Matrix::Zero(2, 2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int t = 0; t < 2; ++t) {
        const int row = keep == 0 ? 2 * a + t : 2 * t + a;
        const int col = keep == 0 ? 2 * b + t : 2 * t + b;
        out(a, b) += m(row, col);
      }
  return DensityMatrix::trusted(hermitize(out));
}

}  // namespace qtomo
