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

#include "core/measurement.hpp"

#include <algorithm>
#include <cmath>

#include "core/random_states.hpp"

namespace qtomo {

namespace {

Matrix axis_projector(const Eigen::Vector3d& u, int sign) {
  BlochVector v{sign * u.x(), sign * u.y(), sign * u.z()};
  return bloch_matrix(v);
}

}  // namespace

Povm::Povm(std::vector<Matrix> effects, std::string label)
    : dim_(static_cast<int>(effects.at(0).rows())),
      effects_(std::move(effects)),
      label_(std::move(label)) {
  offsets_.reserve(effects_.size());
  coords_.reserve(effects_.size());
  for (const Matrix& e : effects_) {
    double m0;
    RealVector m;
    effect_coordinates(e, m0, m);
    offsets_.push_back(m0);
    coords_.push_back(std::move(m));
  }
}

Povm Povm::validated(std::vector<Matrix> effects, std::string label) {
  if (effects.empty()) throw DomainError("POVM needs at least one effect");
  const Eigen::Index d = effects[0].rows();
  if (d != 2 && d != 4) throw DimensionError("POVM dim must be 2 or 4");
  Matrix sum = Matrix::Zero(d, d);
  for (const Matrix& e : effects) {
    if (e.rows() != d || e.cols() != d)
      throw DimensionError("POVM effects have mismatched dimensions");
    if ((e - e.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
      throw DomainError("POVM effect is not Hermitian");
    if (hermitian_eigenvalues(hermitize(e)).minCoeff() < -kPsdTol)
      throw DomainError("POVM effect has a negative eigenvalue");
    sum += e;
  }
  if ((sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10)
    throw DomainError("POVM effects do not resolve the identity");
  return Povm(std::move(effects), std::move(label));
}

Povm Povm::trusted(std::vector<Matrix> effects, std::string label) {
  return Povm(std::move(effects), std::move(label));
}

std::vector<Povm> mub6_measurements() {
  const char* names[3] = {"mub6:x", "mub6:y", "mub6:z"};
  std::vector<Povm> out;
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d u = Eigen::Vector3d::Zero();
    u(k) = 1.0;
    out.push_back(Povm::trusted({axis_projector(u, +1), axis_projector(u, -1)},
                                names[k]));
  }
  return out;
}

std::array<Eigen::Vector3d, 4> tetrahedron_directions() {
  const double z = -1.0 / 3.0;
  const double r = 2.0 * std::sqrt(2.0) / 3.0;  // sin(arccos(-1/3))
  std::array<Eigen::Vector3d, 4> a;
  a[0] = Eigen::Vector3d(0, 0, 1);
  for (int k = 0; k < 3; ++k) {
    const double phi = 2.0 * M_PI * k / 3.0;
    a[static_cast<size_t>(k + 1)] =
        Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z);
  }
  return a;
}

Povm tetrahedron_povm() {
  return rotated_tetrahedron_povm(Eigen::Vector3d(0, 0, 1));
}

Povm rotated_tetrahedron_povm(const Eigen::Vector3d& direction) {
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  if (direction.norm() > 1e-12)
    rot = rotation_from_z_to(direction.normalized());
  std::vector<Matrix> effects;
  for (const Eigen::Vector3d& a : tetrahedron_directions()) {
    const Eigen::Vector3d b = rot * a;
    BlochVector v{b.x(), b.y(), b.z()};
    effects.push_back(0.5 * bloch_matrix(v));  // (1 + b.sigma)/4
  }
  return Povm::trusted(std::move(effects), "tetrahedron");
}

Povm projector_measurement(const PureState& psi) {
  const Matrix p = psi.vec() * psi.vec().adjoint();
  return Povm::trusted({p, Matrix::Identity(psi.dim(), psi.dim()) - p},
                       "projector");
}

Povm factorized_projector(const PureState& psi_a, const PureState& psi_b) {
  if (psi_a.dim() != 2 || psi_b.dim() != 2)
    throw DimensionError("factorized_projector expects two qubit states");
  Vector joint(4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      joint(2 * i + j) = psi_a.vec()(i) * psi_b.vec()(j);
  const Matrix p = joint * joint.adjoint();
  std::vector<Matrix> effects{p, Matrix::Identity(4, 4) - p};
  return Povm::trusted(std::move(effects), "factorized");
}

const char* platonic_name(PlatonicSolid solid) {
  switch (solid) {
    case PlatonicSolid::octahedron:
      return "octahedron";
    case PlatonicSolid::cube:
      return "cube";
    case PlatonicSolid::icosahedron:
      return "icosahedron";
    case PlatonicSolid::dodecahedron:
      return "dodecahedron";
  }
  return "?";
}

std::vector<Povm> platonic_measurements(PlatonicSolid solid) {
  std::vector<Eigen::Vector3d> vertices;
  auto add = [&vertices](double x, double y, double z) {
    vertices.emplace_back(x, y, z);
  };
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  switch (solid) {
    case PlatonicSolid::octahedron:
      add(1, 0, 0);
      add(-1, 0, 0);
      add(0, 1, 0);
      add(0, -1, 0);
      add(0, 0, 1);
      add(0, 0, -1);
      break;
    case PlatonicSolid::cube:
      for (int sx : {-1, 1})
        for (int sy : {-1, 1})
          for (int sz : {-1, 1}) add(sx, sy, sz);
      break;
    case PlatonicSolid::icosahedron:
      for (int s1 : {-1, 1})
        for (int s2 : {-1, 1}) {
          add(0, s1, s2 * phi);
          add(s1, s2 * phi, 0);
          add(s2 * phi, 0, s1);
        }
      break;
    case PlatonicSolid::dodecahedron:
      for (int sx : {-1, 1})
        for (int sy : {-1, 1})
          for (int sz : {-1, 1}) add(sx, sy, sz);
      for (int s1 : {-1, 1})
        for (int s2 : {-1, 1}) {
          add(0, s1 / phi, s2 * phi);
          add(s1 / phi, s2 * phi, 0);
          add(s2 * phi, 0, s1 / phi);
        }
      break;
  }
  for (auto& v : vertices) v.normalize();

  // Keep one representative per antipodal pair (the lexicographically
  // larger one) and order measurements deterministically.
  auto lex_less = [](const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    if (std::abs(a.x() - b.x()) > 1e-12) return a.x() < b.x();
    if (std::abs(a.y() - b.y()) > 1e-12) return a.y() < b.y();
    return a.z() < b.z() - 1e-12;
  };
  std::vector<Eigen::Vector3d> reps;
  for (const auto& v : vertices) {
    const Eigen::Vector3d neg = -v;
    if (lex_less(v, neg)) continue;  // the partner will represent this pair
    bool seen = false;
    for (const auto& r : reps)
      if ((r - v).norm() < 1e-9) seen = true;
    if (!seen) reps.push_back(v);
  }
  std::sort(reps.begin(), reps.end(), lex_less);

  std::vector<Povm> out;
  const std::string base = platonic_name(solid);
  for (size_t k = 0; k < reps.size(); ++k)
    out.push_back(
        axis_measurement(reps[k], base + ":" + std::to_string(k)));
  return out;
}

Povm haar_random_projector(int dim, Rng& rng) {
  if (dim != 2 && dim != 4)
    throw DimensionError("haar_random_projector: dim must be 2 or 4");
  const Matrix u = haar_unitary(dim, rng);
  return projector_measurement(PureState::trusted(u.col(0)));
}

std::vector<Povm> pauli_product_measurements() {
  // Single-qubit eigenprojectors of sigma_k, "+" first.
  std::array<std::array<Matrix, 2>, 3> proj;
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d u = Eigen::Vector3d::Zero();
    u(k) = 1.0;
    proj[static_cast<size_t>(k)] = {axis_projector(u, +1),
                                    axis_projector(u, -1)};
  }
  const char axes[] = "xyz";
  std::vector<Povm> out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      std::vector<Matrix> effects;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          effects.push_back(kron(proj[static_cast<size_t>(i)][a],
                                 proj[static_cast<size_t>(j)][b]));
      out.push_back(Povm::trusted(std::move(effects),
                                  std::string("pauli:") + axes[i] + axes[j]));
    }
  return out;
}

RealVector born_probabilities(const DensityMatrix& rho, const Povm& m) {
  if (rho.dim() != m.dim())
    throw DimensionError("state and POVM dimensions do not match");
  RealVector p(m.n_outcomes());
  for (int k = 0; k < m.n_outcomes(); ++k)
    p(k) = (m.effect(k) * rho.mat()).trace().real();
  p = p.cwiseMax(0.0);
  const double total = p.sum();
  if (total <= 0.0) throw DomainError("Born probabilities sum to zero");
  return p / total;
}

int sample_outcome(const DensityMatrix& rho, const Povm& m, Rng& rng) {
  const RealVector p = born_probabilities(rho, m);
  const double u = rng.uniform();
  double acc = 0.0;
  for (int k = 0; k < p.size(); ++k) {
    acc += p(k);
    if (u < acc) return k;
  }
  return static_cast<int>(p.size()) - 1;
}

Povm axis_measurement(const Eigen::Vector3d& u, const std::string& label) {
  return Povm::trusted({axis_projector(u, +1), axis_projector(u, -1)}, label);
}

Eigen::Matrix3d rotation_from_z_to(const Eigen::Vector3d& v) {
  const Eigen::Vector3d z(0, 0, 1);
  const double c = z.dot(v);
  if (c > 1.0 - 1e-12) return Eigen::Matrix3d::Identity();
  if (c < -1.0 + 1e-12) {
    // Antipodal: rotate by pi about the x axis.
    Eigen::Matrix3d r;
    r << 1, 0, 0, 0, -1, 0, 0, 0, -1;
    return r;
  }
  const Eigen::Vector3d axis = z.cross(v).normalized();
  const double angle = std::acos(std::clamp(c, -1.0, 1.0));
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

}  // namespace qtomo
