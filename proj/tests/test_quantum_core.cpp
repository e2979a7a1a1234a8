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

#include "doctest.h"
#include "test_support.hpp"

using namespace qtomo;
using namespace qtomo::testing;

namespace {

DensityMatrix maximally_mixed(int dim) {
  return DensityMatrix::trusted(Matrix::Identity(dim, dim) / dim);
}

}  // namespace

TEST_CASE("density matrix invariants are enforced") {
  Matrix bad(2, 2);
  bad << 1.2, 0, 0, -0.2;
  CHECK_THROWS_AS((void)DensityMatrix::validated(bad), DomainError);

  Matrix not_hermitian(2, 2);
  not_hermitian << 0.5, Complex(0.1, 0.2), Complex(0.1, 0.1), 0.5;
  CHECK_THROWS_AS((void)DensityMatrix::validated(not_hermitian), DomainError);

  Matrix wrong_trace(2, 2);
  wrong_trace << 0.6, 0, 0, 0.6;
  CHECK_THROWS_AS((void)DensityMatrix::validated(wrong_trace), DomainError);

  CHECK_THROWS_AS((void)DensityMatrix::validated(Matrix::Identity(3, 3) / 3.0),
                  DimensionError);
}

TEST_CASE("bloch round trips") {
  CHECK(trace_distance(density_from_bloch({0, 0, 0}), maximally_mixed(2)) ==
        doctest::Approx(0.0).epsilon(1e-12));

  const DensityMatrix pole = density_from_bloch({0, 0, 1});
  CHECK(pole.mat()(0, 0).real() == doctest::Approx(1.0));
  CHECK(std::abs(pole.mat()(1, 1)) == doctest::Approx(0.0));

  const BlochVector center = bloch_from_density(maximally_mixed(2));
  CHECK(center.length() == doctest::Approx(0.0).epsilon(1e-12));
  const BlochVector top = bloch_from_density(basis_state(2, 0).projector());
  CHECK(top.s3 == doctest::Approx(1.0));

  // (I + 0.6 sigma_1)/2 has Stokes vector (0.6, 0, 0).
  const BlochVector v = bloch_from_density(qubit_from_bloch(0.6, 0, 0));
  CHECK(v.s1 == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(v.s2 == doctest::Approx(0.0).epsilon(1e-12));

  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    BlochVector in{rng.gaussian(), rng.gaussian(), rng.gaussian()};
    const double len = in.length();
    const double target = rng.uniform();  // inside the closed ball
    in.s1 *= target / len;
    in.s2 *= target / len;
    in.s3 *= target / len;
    const BlochVector out = bloch_from_density(density_from_bloch(in));
    CHECK(std::abs(out.s1 - in.s1) < 1e-12);
    CHECK(std::abs(out.s2 - in.s2) < 1e-12);
    CHECK(std::abs(out.s3 - in.s3) < 1e-12);
  }

  CHECK_THROWS_AS((void)bloch_from_density(maximally_mixed(4)),
                  DimensionError);
}

TEST_CASE("fidelity basics and the epsilon-shell law") {
  Rng rng(7);
  for (int k = 0; k < 20; ++k) {
    const DensityMatrix rho = random_state(PriorKind::bures_uniform, 2, rng);
    CHECK(fidelity(rho, rho) == doctest::Approx(1.0).epsilon(1e-10));
  }
  CHECK(fidelity(basis_state(2, 0).projector(), basis_state(2, 1).projector()) ==
        doctest::Approx(0.0).epsilon(1e-12));

  // Pure state vs collinear mixed state of Bloch length 1 - eps.
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const DensityMatrix pure = qubit_from_bloch(0, 0, 1);
    const DensityMatrix mixed = qubit_from_bloch(0, 0, 1 - eps);
    CHECK(1.0 - fidelity(pure, mixed) ==
          doctest::Approx(eps / 2).epsilon(1e-6));
  }
}

TEST_CASE("general fidelity matches the qubit closed form") {
  Rng rng(23);
  for (int k = 0; k < 300; ++k) {
    const DensityMatrix a =
        with_interior_margin(random_state(PriorKind::bures_uniform, 2, rng));
    const DensityMatrix b = with_interior_margin(
        k % 3 == 0 ? random_state(PriorKind::haar_pure, 2, rng)
                   : random_state(PriorKind::hs_uniform, 2, rng));
    CHECK(std::abs(fidelity(a, b) - qubit_fidelity_closed_form(a, b)) <
          1e-10);
  }
}

TEST_CASE("fidelity is unitarily invariant") {
  Rng rng(31);
  for (int k = 0; k < 50; ++k) {
    const int dim = k % 2 == 0 ? 2 : 4;
    const DensityMatrix a = random_state(PriorKind::bures_uniform, dim, rng);
    const DensityMatrix b = random_state(PriorKind::hs_uniform, dim, rng);
    const Matrix u = haar_unitary(dim, rng);
    const DensityMatrix ua =
        DensityMatrix::trusted(hermitize(u * a.mat() * u.adjoint()));
    const DensityMatrix ub =
        DensityMatrix::trusted(hermitize(u * b.mat() * u.adjoint()));
    CHECK(std::abs(fidelity(ua, ub) - fidelity(a, b)) < 1e-10);
  }
}

TEST_CASE("bures distance and angle") {
  const DensityMatrix z0 = basis_state(2, 0).projector();
  const DensityMatrix z1 = basis_state(2, 1).projector();
  CHECK(bures_distance(z0, z0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(bures_distance(z0, z1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(bures_angle(z0, z1) == doctest::Approx(M_PI / 2));

  // d_B^2 ~ 1 - F for small infidelity.
  const DensityMatrix near = qubit_from_bloch(0, 0, 1.0 - 2e-4);
  const double one_minus_f = 1.0 - fidelity(z0, near);
  CHECK(one_minus_f == doctest::Approx(1e-4).epsilon(0.01));
  const double db2 = std::pow(bures_distance(z0, near), 2);
  CHECK(std::abs(db2 - one_minus_f) / one_minus_f < 0.01);
}

TEST_CASE("trace, Hilbert-Schmidt and relative entropy") {
  Rng rng(5);
  const DensityMatrix rho = random_state(PriorKind::bures_uniform, 2, rng);
  CHECK(trace_distance(rho, rho) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(hs_distance(rho, rho) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(relative_entropy(rho, rho) == doctest::Approx(0.0).epsilon(1e-10));

  // Qubit trace distance is half the Bloch separation.
  for (int k = 0; k < 100; ++k) {
    const DensityMatrix a = random_state(PriorKind::hs_uniform, 2, rng);
    const DensityMatrix b = random_state(PriorKind::hs_uniform, 2, rng);
    const BlochVector u = bloch_from_density(a);
    const BlochVector v = bloch_from_density(b);
    const double sep = std::sqrt(std::pow(u.s1 - v.s1, 2) +
                                 std::pow(u.s2 - v.s2, 2) +
                                 std::pow(u.s3 - v.s3, 2));
    CHECK(trace_distance(a, b) == doctest::Approx(sep / 2).epsilon(1e-9));
  }

  CHECK(relative_entropy(basis_state(2, 0).projector(), maximally_mixed(2)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-10));
  CHECK(std::isinf(relative_entropy(basis_state(2, 0).projector(),
                                    basis_state(2, 1).projector())));
}

TEST_CASE("distance axioms on random triples") {
  Rng rng(101);
  for (int k = 0; k < 1000; ++k) {
    const int dim = k % 4 == 0 ? 4 : 2;
    const DensityMatrix a = random_state(PriorKind::bures_uniform, dim, rng);
    const DensityMatrix b = random_state(PriorKind::hs_uniform, dim, rng);
    const DensityMatrix c = random_state(PriorKind::bures_uniform, dim, rng);

    const double f = fidelity(a, b);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    CHECK(std::abs(f - fidelity(b, a)) < 1e-10);

    CHECK(trace_distance(a, b) <=
          trace_distance(a, c) + trace_distance(c, b) + 1e-9);
    CHECK(bures_distance(a, b) <=
          bures_distance(a, c) + bures_distance(c, b) + 1e-9);
    CHECK(bures_angle(a, b) <= bures_angle(a, c) + bures_angle(c, b) + 1e-9);
    CHECK(trace_distance(a, b) <= 1.0 + 1e-12);
    CHECK(hs_distance(a, b) >= 0.0);
  }
}

TEST_CASE("tensor, purity, eigendecompose") {
  const DensityMatrix i4 = tensor(maximally_mixed(2), maximally_mixed(2));
  CHECK((i4.mat() - Matrix::Identity(4, 4) / 4.0).cwiseAbs().maxCoeff() <
        1e-14);
  CHECK(purity(basis_state(2, 0).projector()) == doctest::Approx(1.0));
  CHECK(purity(maximally_mixed(4)) == doctest::Approx(0.25));

  Rng rng(3);
  const DensityMatrix rho = random_state(PriorKind::bures_uniform, 4, rng);
  const EigenSystem es = eigendecompose(rho);
  for (int i = 0; i + 1 < 4; ++i) CHECK(es.values(i) >= es.values(i + 1));
  const Matrix rebuilt = es.vectors * es.values.asDiagonal().toDenseMatrix().cast<Complex>() *
                         es.vectors.adjoint();
  CHECK((rebuilt - rho.mat()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("project_to_physical") {
  Rng rng(17);
  // Fixed point on physical states.
  for (int k = 0; k < 50; ++k) {
    const DensityMatrix rho = random_state(PriorKind::bures_uniform, 2, rng);
    CHECK((project_to_physical(rho.mat()).mat() - rho.mat())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }

  // Hand-checked eigenvalue truncation.
  Matrix diag(2, 2);
  diag << 1.2, 0, 0, -0.2;
  const DensityMatrix fixed = project_to_physical(diag);
  CHECK(fixed.mat()(0, 0).real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(fixed.mat()(1, 1)) < 1e-12);

  // Overlong Bloch vectors project to the sphere along the same direction.
  const Matrix over = bloch_matrix({0.9, 0.96, 0.72});  // 1.5 * unit vector
  const BlochVector projected = bloch_from_density(project_to_physical(over));
  CHECK(projected.length() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(projected.s1 == doctest::Approx(0.6));
  CHECK(projected.s2 == doctest::Approx(0.64));
  CHECK(projected.s3 == doctest::Approx(0.48));

  // Idempotent, including on 4x4 inputs.
  for (int k = 0; k < 20; ++k) {
    Matrix h = ginibre(4, 4, rng);
    h = hermitize(h);
    h /= std::max(1.0, std::abs(h.trace().real()));
    const DensityMatrix once = project_to_physical(h);
    const DensityMatrix twice = project_to_physical(once.mat());
    CHECK((once.mat() - twice.mat()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(hermitian_eigenvalues(once.mat()).minCoeff() >= -1e-12);
    CHECK(once.mat().trace().real() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("partial traces of product states recover the factors") {
  Rng rng(29);
  const DensityMatrix a = random_state(PriorKind::bures_uniform, 2, rng);
  const DensityMatrix b = random_state(PriorKind::hs_uniform, 2, rng);
  const DensityMatrix ab = tensor(a, b);
  CHECK((partial_trace_qubit(ab, 0).mat() - a.mat()).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK((partial_trace_qubit(ab, 1).mat() - b.mat()).cwiseAbs().maxCoeff() <
        1e-12);
}
