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

#ifndef QTOMO_CORE_MEASUREMENT_HPP
#define QTOMO_CORE_MEASUREMENT_HPP

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/states.hpp"

namespace qtomo {

/// Positive operator-valued measure: PSD effects resolving the identity.
/// Effect coordinates in the generalized Pauli frame are cached so Born
/// probabilities reduce to dot products on state coordinates.
class Povm {
 public:
  /// Validates PSD effects (eigenvalues >= -1e-10) and completeness
  /// (sum = identity within 1e-10 elementwise).
  static Povm validated(std::vector<Matrix> effects, std::string label);

  /// No validation; for constructions that are correct by construction.
  static Povm trusted(std::vector<Matrix> effects, std::string label);

  int dim() const { return dim_; }
  int n_outcomes() const { return static_cast<int>(effects_.size()); }
  const Matrix& effect(int k) const { return effects_[static_cast<size_t>(k)]; }
  const std::vector<Matrix>& effects() const { return effects_; }
  const std::string& label() const { return label_; }

  /// Tr(effect k, rho) = offset(k) + coords(k) . state_coordinates(rho).
  double coord_offset(int k) const { return offsets_[static_cast<size_t>(k)]; }
  const RealVector& coords(int k) const {
    return coords_[static_cast<size_t>(k)];
  }

 private:
  Povm(std::vector<Matrix> effects, std::string label);

  int dim_;
  std::vector<Matrix> effects_;
  std::vector<double> offsets_;
  std::vector<RealVector> coords_;
  std::string label_;
};

/// One recorded detection event.
struct MeasurementRecord {
  std::shared_ptr<const Povm> povm;
  int outcome = 0;
};

/// The three Pauli eigenbasis measurements (x, y, z order, "+" outcome
/// first); the z measurement is {|0><0|, |1><1|}.
std::vector<Povm> mub6_measurements();

/// Minimal four-outcome qubit POVM M_i = (1 + a_i.sigma)/4 with the a_i on
/// ideal tetrahedron directions, a_i.a_j = (4/3) delta_ij - 1/3. Canonical
/// orientation: a_1 = +z, the rest at polar angle arccos(-1/3) and azimuths
/// 0, 120, 240 degrees.
Povm tetrahedron_povm();

/// The canonical tetrahedron Bloch directions.
std::array<Eigen::Vector3d, 4> tetrahedron_directions();

/// Tetrahedron POVM with a_1 rotated onto `direction` (zero direction keeps
/// the canonical orientation).
Povm rotated_tetrahedron_povm(const Eigen::Vector3d& direction);

/// {|psi><psi|, 1 - |psi><psi|}.
Povm projector_measurement(const PureState& psi);

/// projector_measurement(psiA (x) psiB) on two qubits.
Povm factorized_projector(const PureState& psi_a, const PureState& psi_b);

enum class PlatonicSolid { octahedron, cube, icosahedron, dodecahedron };

/// One two-outcome projective measurement per antipodal vertex pair of the
/// solid; the octahedron reproduces mub6_measurements.
std::vector<Povm> platonic_measurements(PlatonicSolid solid);

const char* platonic_name(PlatonicSolid solid);

/// Projector measurement of a Haar-random pure state (first column of a
/// Haar unitary).
Povm haar_random_projector(int dim, Rng& rng);

/// The nine two-qubit measurements sigma_i (x) sigma_j (four outcomes each,
/// tensor products of the Pauli eigenprojectors).
std::vector<Povm> pauli_product_measurements();

/// Born rule probabilities Tr(M_k rho), clipped to >= 0 and renormalized.
RealVector born_probabilities(const DensityMatrix& rho, const Povm& m);

/// Inverse-CDF draw from born_probabilities using one uniform variate.
int sample_outcome(const DensityMatrix& rho, const Povm& m, Rng& rng);

/// Two-outcome projector onto the +z eigenstate of u.sigma (qubit helper
/// used by rotated measurement frames).
Povm axis_measurement(const Eigen::Vector3d& u, const std::string& label);

/// Rotation taking +z onto v (Rodrigues); v = -z maps to a rotation by pi
/// about x, near-zero v to the identity.
Eigen::Matrix3d rotation_from_z_to(const Eigen::Vector3d& v);

}  // namespace qtomo

#endif  // QTOMO_CORE_MEASUREMENT_HPP
