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

#include "core/random_states.hpp"

#include <cmath>

namespace qtomo {

const char* prior_kind_name(PriorKind kind) {
  switch (kind) {
    case PriorKind::bures_uniform:
      return "bures_uniform";
    case PriorKind::hs_uniform:
      return "hs_uniform";
    case PriorKind::haar_pure:
      return "haar_pure";
  }
  return "?";
}

std::optional<PriorKind> prior_kind_from_name(const std::string& name) {
  if (name == "bures_uniform") return PriorKind::bures_uniform;
  if (name == "hs_uniform") return PriorKind::hs_uniform;
  if (name == "haar_pure") return PriorKind::haar_pure;
  return std::nullopt;
}

Matrix ginibre(int rows, int cols, Rng& rng) {
  Matrix g(rows, cols);
  const double scale = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i)
      g(i, j) = Complex(rng.gaussian() * scale, rng.gaussian() * scale);
  return g;
}

Matrix haar_unitary(int dim, Rng& rng) {
  if (dim != 2 && dim != 4)
    throw DimensionError("haar_unitary: dim must be 2 or 4");
  const Matrix g = ginibre(dim, dim, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    const Complex rjj = r(j, j);
    const double a = std::abs(rjj);
    q.col(j) *= (a > 0) ? rjj / a : Complex(1, 0);
  }
  return q;
}

DensityMatrix state_from_latent(PriorKind kind, const StateLatent& latent) {
  switch (kind) {
    case PriorKind::haar_pure: {
      const Vector v = latent.g.col(0);
      const double n = v.norm();
      if (n < 1e-200) throw DomainError("degenerate pure-state latent");
      const Vector psi = v / n;
      return DensityMatrix::trusted(psi * psi.adjoint());
    }
    case PriorKind::hs_uniform: {
      Matrix w = latent.g * latent.g.adjoint();
      return DensityMatrix::trusted(hermitize(w / w.trace().real()));
    }
    case PriorKind::bures_uniform: {
      const int d = static_cast<int>(latent.g.rows());
      const Matrix a = Matrix::Identity(d, d) + latent.u;
      Matrix w = a * latent.g * latent.g.adjoint() * a.adjoint();
      return DensityMatrix::trusted(hermitize(w / w.trace().real()));
    }
  }
  throw DomainError("unknown prior kind");
}

StateLatent sample_latent(const PriorSpec& spec, Rng& rng) {
  if (spec.dim != 2 && spec.dim != 4)
    throw DimensionError("sample_prior: dim must be 2 or 4");
  StateLatent latent;
  switch (spec.kind) {
    case PriorKind::haar_pure:
      latent.g = ginibre(spec.dim, 1, rng);
      break;
    case PriorKind::hs_uniform:
      latent.g = ginibre(spec.dim, spec.dim, rng);
      break;
    case PriorKind::bures_uniform:
      latent.g = ginibre(spec.dim, spec.dim, rng);
      latent.u = haar_unitary(spec.dim, rng);
      break;
  }
  return latent;
}

DensityMatrix sample_prior(const PriorSpec& spec, Rng& rng) {
  return state_from_latent(spec.kind, sample_latent(spec, rng));
}

double bures_radial_pdf(double s) {
  if (s < 0.0 || s >= 1.0)
    throw DomainError("bures_radial_pdf is defined on [0, 1)");
  return 4.0 * s * s / (M_PI * std::sqrt(1.0 - s * s));
}

double bures_radial_cdf(double s) {
  if (s < 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return (2.0 / M_PI) * (std::asin(s) - s * std::sqrt(1.0 - s * s));
}

}  // namespace qtomo
