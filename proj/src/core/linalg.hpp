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

#ifndef QTOMO_CORE_LINALG_HPP
#define QTOMO_CORE_LINALG_HPP

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace qtomo {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

/// Eigenvalue floor applied before matrix sqrt/log/inverse of nearly
/// rank-deficient states.
inline constexpr double kEigenvalueClamp = 1e-14;

Matrix pauli(int k);  // k in {0,1,2,3}; pauli(0) = I

/// Traceless Hermitian basis {G_k} for dim 2 (the Pauli vector) or dim 4
/// (the 15 nontrivial sigma_i (x) sigma_j), each with Tr(G_k^2) = dim.
/// rho = (I + sum_k s_k G_k)/dim with s_k = Tr(rho G_k).
const std::vector<Matrix>& generalized_pauli_basis(int dim);

Matrix kron(const Matrix& a, const Matrix& b);

/// (A + A^dagger)/2, discarding the anti-Hermitian rounding residue.
Matrix hermitize(const Matrix& a);

/// Eigenvalues (ascending, as Eigen returns them) of a Hermitian matrix.
RealVector hermitian_eigenvalues(const Matrix& a);

/// Hermitian principal square root; negative eigenvalues are clamped to 0.
Matrix hermitian_sqrt(const Matrix& a);

/// Hermitian logarithm with eigenvalues clamped at kEigenvalueClamp.
Matrix hermitian_log(const Matrix& a);

/// Numerical rank of a real matrix via SVD with a relative tolerance.
int matrix_rank(const RealMatrix& a, double rel_tol = 1e-10);

/// Coefficients of a Hermitian matrix in the generalized Pauli frame:
/// out[k] = Tr(M G_k) / dim for k >= 1 and out0 = Tr(M) / dim, so that
/// Tr(M rho) = out0 + out . coords(rho).
void effect_coordinates(const Matrix& effect, double& out0, RealVector& out);

/// coords(rho): s_k = Tr(rho G_k) (the generalized Bloch vector).
RealVector state_coordinates(const Matrix& rho);

/// Inverse of state_coordinates; the result is Hermitian and unit trace but
/// not necessarily positive.
Matrix matrix_from_coordinates(int dim, const RealVector& s);

}  // namespace qtomo

#endif  // QTOMO_CORE_LINALG_HPP
