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

#ifndef QTOMO_CORE_STATES_HPP
#define QTOMO_CORE_STATES_HPP

#include <stdexcept>
#include <utility>

#include "core/linalg.hpp"

namespace qtomo {

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kTraceTol = 1e-12;
inline constexpr double kPsdTol = 1e-10;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Bloch (Stokes) vector of a qubit state; |s| <= 1 for physical states.
struct BlochVector {
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;

  double length() const { return std::sqrt(s1 * s1 + s2 * s2 + s3 * s3); }
};

/// Unit-trace positive-semidefinite Hermitian matrix. Validating
/// constructors enforce Hermiticity to 1e-12, unit trace to 1e-12 and
/// eigenvalues >= -1e-10; internal code paths that produce states valid by
/// construction use the trusted factory.
class DensityMatrix {
 public:
  /// Validates all invariants; throws DomainError / DimensionError.
  static DensityMatrix validated(Matrix m);

  /// No validation; caller guarantees the invariants hold.
  static DensityMatrix trusted(Matrix m) { return DensityMatrix(std::move(m)); }

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Matrix& mat() const { return mat_; }

 private:
  explicit DensityMatrix(Matrix m) : mat_(std::move(m)) {}
  Matrix mat_;
};

/// Normalized state vector (squared norm within 1e-12 of 1).
class PureState {
 public:
  static PureState validated(Vector v);
  static PureState trusted(Vector v) { return PureState(std::move(v)); }

  /// v / |v|; throws DomainError on (near-)zero input.
  static PureState normalized(const Vector& v);

  int dim() const { return static_cast<int>(vec_.size()); }
  const Vector& vec() const { return vec_; }
  DensityMatrix projector() const {
    return DensityMatrix::trusted(vec_ * vec_.adjoint());
  }

 private:
  explicit PureState(Vector v) : vec_(std::move(v)) {}
  Vector vec_;
};

// --- Bloch parametrization ---------------------------------------------

/// (I + v.sigma)/2. Accepts |v| > 1; the result then fails the PSD
/// invariant and is returned as a raw matrix for the caller to flag.
Matrix bloch_matrix(const BlochVector& v);

/// bloch_matrix for physical |v| <= 1 (+ tolerance), validated.
DensityMatrix density_from_bloch(const BlochVector& v);

/// v_i = Tr(rho sigma_i); qubit only.
BlochVector bloch_from_density(const DensityMatrix& rho);

// --- Distances -----------------------------------------------------------

/// Uhlmann fidelity [Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))]^2, clipped to
/// [0, 1].
double fidelity(const DensityMatrix& rho1, const DensityMatrix& rho2);

/// sqrt(2 - 2 sqrt(F)).
double bures_distance(const DensityMatrix& rho1, const DensityMatrix& rho2);

/// arccos(sqrt(F)).
double bures_angle(const DensityMatrix& rho1, const DensityMatrix& rho2);

/// Tr|rho1 - rho2| / 2.
double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2);

/// Tr[(rho1 - rho2)^2] (squared Frobenius norm).
double hs_distance(const DensityMatrix& rho1, const DensityMatrix& rho2);

/// Tr[rho1 (log rho1 - log rho2)], natural log; +infinity when
/// supp(rho1) is not contained in supp(rho2).
double relative_entropy(const DensityMatrix& rho1, const DensityMatrix& rho2);

// --- Utilities -----------------------------------------------------------

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);

double purity(const DensityMatrix& rho);

/// Eigen-decomposition with eigenvalues sorted descending.
struct EigenSystem {
  RealVector values;  // descending
  Matrix vectors;     // columns aligned with values
};
EigenSystem eigendecompose(const DensityMatrix& rho);

/// Frobenius-nearest unit-trace PSD matrix: eigenvalues are projected onto
/// the probability simplex (water-filling truncation).
DensityMatrix project_to_physical(const Matrix& hermitian);

/// Reduced state of a two-qubit density matrix (qubit = 0 keeps the first
/// factor, qubit = 1 the second).
DensityMatrix partial_trace_qubit(const DensityMatrix& rho, int keep);

}  // namespace qtomo

#endif  // QTOMO_CORE_STATES_HPP
