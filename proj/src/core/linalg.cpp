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

#include "core/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace qtomo {

namespace {
const Complex kI(0.0, 1.0);
}

Matrix pauli(int k) {
  Matrix m(2, 2);
  switch (k) {
    case 0:
      m << 1, 0, 0, 1;
      break;
    case 1:
      m << 0, 1, 1, 0;
      break;
    case 2:
      m << 0, -kI, kI, 0;
      break;
    case 3:
      m << 1, 0, 0, -1;
      break;
    default:
      throw std::invalid_argument("pauli index must be in 0..3");
  }
  return m;
}

const std::vector<Matrix>& generalized_pauli_basis(int dim) {
  static const std::vector<Matrix> basis2 = [] {
    std::vector<Matrix> b;
    for (int k = 1; k <= 3; ++k) b.push_back(pauli(k));
    return b;
  }();
  static const std::vector<Matrix> basis4 = [] {
    std::vector<Matrix> b;
    for (int i = 0; i <= 3; ++i)
      for (int j = 0; j <= 3; ++j) {
        if (i == 0 && j == 0) continue;
        b.push_back(kron(pauli(i), pauli(j)));
      }
    return b;
  }();
  if (dim == 2) return basis2;
  if (dim == 4) return basis4;
  throw std::invalid_argument("generalized_pauli_basis supports dim 2 or 4");
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix hermitize(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

RealVector hermitian_eigenvalues(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

Matrix hermitian_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  RealVector lam = es.eigenvalues();
  // Rounding noise on true zeros would blow up to sqrt(eps); flush it.
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) < kEigenvalueClamp) lam(i) = 0.0;
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
         es.eigenvectors().adjoint();
}

Matrix hermitian_log(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  RealVector lam = es.eigenvalues().cwiseMax(kEigenvalueClamp);
  return es.eigenvectors() * lam.array().log().matrix().asDiagonal() *
         es.eigenvectors().adjoint();
}

int matrix_rank(const RealMatrix& a, double rel_tol) {
  Eigen::JacobiSVD<RealMatrix> svd(a);
  if (svd.singularValues().size() == 0) return 0;
  double cutoff = rel_tol * svd.singularValues()(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > cutoff) ++rank;
  return rank;
}

void effect_coordinates(const Matrix& effect, double& out0, RealVector& out) {
  const int dim = static_cast<int>(effect.rows());
  const auto& basis = generalized_pauli_basis(dim);
  out0 = effect.trace().real() / dim;
  out.resize(static_cast<Eigen::Index>(basis.size()));
  for (size_t k = 0; k < basis.size(); ++k)
    out(static_cast<Eigen::Index>(k)) =
        (effect * basis[k]).trace().real() / dim;
}

RealVector state_coordinates(const Matrix& rho) {
  const int dim = static_cast<int>(rho.rows());
  const auto& basis = generalized_pauli_basis(dim);
  RealVector s(static_cast<Eigen::Index>(basis.size()));
  for (size_t k = 0; k < basis.size(); ++k)
    s(static_cast<Eigen::Index>(k)) = (rho * basis[k]).trace().real();
  return s;
}

Matrix matrix_from_coordinates(int dim, const RealVector& s) {
  const auto& basis = generalized_pauli_basis(dim);
  if (s.size() != static_cast<Eigen::Index>(basis.size()))
    throw std::invalid_argument("coordinate vector has wrong length");
  Matrix m = Matrix::Identity(dim, dim);
  for (size_t k = 0; k < basis.size(); ++k)
    m += s(static_cast<Eigen::Index>(k)) * basis[k];
  return m / static_cast<double>(dim);
}

}  // namespace qtomo
