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

#ifndef QTOMO_CORE_ESTIMATORS_HPP
#define QTOMO_CORE_ESTIMATORS_HPP

#include <optional>
#include <vector>

#include "core/measurement.hpp"

namespace qtomo {

/// Outcome tallies for one measurement setting.
class CountVector {
 public:
  CountVector(int measurement_id, std::vector<long> counts);

  int measurement_id() const { return measurement_id_; }
  const std::vector<long>& counts() const { return counts_; }
  long total() const { return total_; }
  double frequency(int k) const {
    return static_cast<double>(counts_[static_cast<size_t>(k)]) /
           static_cast<double>(total_);
  }

 private:
  int measurement_id_;
  std::vector<long> counts_;
  long total_;
};

struct IncompleteDesignError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct MleConvergenceError : std::runtime_error {
  MleConvergenceError(const std::string& what, Matrix best)
      : std::runtime_error(what), best_iterate(std::move(best)) {}
  Matrix best_iterate;
};

struct LinearInversionResult {
  Matrix rho_hat;  // Hermitian, unit trace; may violate PSD
  bool physical = false;
};

/// Least-squares solution of frequency(k) = Tr(M_k rho) over Hermitian
/// unit-trace matrices; no positivity projection is applied, the flag
/// reports whether the solution is PSD within tolerance. Throws
/// IncompleteDesignError when the effects do not span the state space.
LinearInversionResult linear_inversion(const std::vector<CountVector>& counts,
                                       const std::vector<Povm>& measurements);

/// sum_k N_k log Tr(M_k rho); -infinity when an observed outcome has zero
/// probability.
double log_likelihood(const DensityMatrix& rho,
                      const std::vector<CountVector>& counts,
                      const std::vector<Povm>& measurements);

struct MleOptions {
  std::optional<double> hedging_beta;  // multiplies L by (det rho)^beta
  int max_iterations = 5000;
  double gain_tolerance = 1e-10;
};

/// Maximum-likelihood state via the damped R rho R fixed-point iteration,
/// started from the maximally mixed state. With hedging the estimate is
/// strictly full rank.
DensityMatrix mle_estimate(const std::vector<CountVector>& counts,
                           const std::vector<Povm>& measurements,
                           const MleOptions& options = {});

/// Fisher information matrix of the measurement set in generalized Bloch
/// coordinates, normalized as (2/K) sum_k I_F(povm_k) over the K settings
/// so that the cycled six-state schedule yields the variance floor
/// (3/(2N)) (1 - s_i^2) per component. Requires an interior state (all
/// eigenvalues > 1e-6).
RealMatrix fisher_information(const DensityMatrix& rho,
                              const std::vector<Povm>& measurements);

/// diag(I_F^{-1}) / N. Throws DomainError when I_F is singular.
RealVector cramer_rao_floor(const DensityMatrix& rho,
                            const std::vector<Povm>& measurements, long n);

}  // namespace qtomo

#endif  // QTOMO_CORE_ESTIMATORS_HPP
