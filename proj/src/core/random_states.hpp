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

#ifndef QTOMO_CORE_RANDOM_STATES_HPP
#define QTOMO_CORE_RANDOM_STATES_HPP

#include <optional>
#include <string>

#include "core/rng.hpp"
#include "core/states.hpp"

namespace qtomo {

enum class PriorKind { bures_uniform, hs_uniform, haar_pure };

struct PriorSpec {
  PriorKind kind = PriorKind::bures_uniform;
  int dim = 2;
};

const char* prior_kind_name(PriorKind kind);
std::optional<PriorKind> prior_kind_from_name(const std::string& name);

/// Latent variables behind a sampled state, kept when a resampler needs to
/// walk in prior-native coordinates. g is the Ginibre factor (a column
/// vector for pure states); u is the Haar factor of the Bures construction
/// and is empty otherwise.
struct StateLatent {
  Matrix g;
  Matrix u;
};

/// Complex Ginibre matrix (i.i.d. standard complex Gaussian entries,
/// unit-variance per complex entry).
Matrix ginibre(int rows, int cols, Rng& rng);

/// Haar-distributed unitary via QR of a Ginibre matrix with the
/// phase-fixing diagonal correction.
Matrix haar_unitary(int dim, Rng& rng);

/// State determined by a latent draw under the given prior kind.
DensityMatrix state_from_latent(PriorKind kind, const StateLatent& latent);

/// Draws latent variables for the prior.
StateLatent sample_latent(const PriorSpec& spec, Rng& rng);

DensityMatrix sample_prior(const PriorSpec& spec, Rng& rng);

/// Radial density 4 s^2 / (pi sqrt(1 - s^2)) of the Bloch-vector length
/// under the Bures-uniform qubit prior; defined on [0, 1).
double bures_radial_pdf(double s);

/// Closed-form CDF of bures_radial_pdf: (2/pi)(arcsin s - s sqrt(1-s^2)).
double bures_radial_cdf(double s);

}  // namespace qtomo

#endif  // QTOMO_CORE_RANDOM_STATES_HPP
