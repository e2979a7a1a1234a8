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

#ifndef QTOMO_CORE_ADAPTIVE_HPP
#define QTOMO_CORE_ADAPTIVE_HPP

#include <functional>
#include <memory>
#include <optional>

#include "core/particle_filter.hpp"

namespace qtomo {

struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};
struct ConfigurationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// --- utility functions ----------------------------------------------------

/// Average predictive probability of each outcome under the posterior:
/// p(k) = sum_s w_s Tr(M_k rho_s).
RealVector predictive_probabilities(const ParticleSet& ps, const Povm& m);

/// Information gain in bits: H[p(k)] - E_s H[p(k|rho_s)], computed from
/// discrete outcome entropies only.
double info_gain_utility(const ParticleSet& ps, const Povm& m);

/// sum_k p(k) lambda_max(posterior mean after outcome k).
double fidelity_utility(const ParticleSet& ps, const Povm& m);

/// Argmax with ties broken uniformly at random; invariant under positive
/// scaling of the utilities.
int pick_argmax_uniform(const RealVector& utilities, Rng& rng);

// --- strategies -------------------------------------------------------------

enum class StrategyKind {
  static_cycle,
  random_haar,
  two_step,
  two_step_guo,
  info_gain,
  fidelity_utility,
  aligned_tetrahedron,
  self_guided
};

enum class TwoStepVariant { bagan, worst_case, guo };
enum class CandidateRestriction { factorized, unconstrained };

const char* strategy_kind_name(StrategyKind kind);
std::optional<StrategyKind> strategy_kind_from_name(const std::string& name);

struct StrategySpec {
  StrategyKind kind = StrategyKind::static_cycle;
  std::string cycle = "mub6";  // static_cycle measurement family
  int candidate_count = 0;     // utility strategies; 0 = dimension default
  CandidateRestriction restriction = CandidateRestriction::unconstrained;
  TwoStepVariant n0_rule = TwoStepVariant::bagan;  // two_step
  int shots_per_eval = 10;                         // self_guided
};

/// Validates the parameters for the kind/dimension; throws
/// ConfigurationError.
void validate_strategy_spec(const StrategySpec& spec, int dim);

/// Default candidate count: 30 random projectors for qubits, 60 for two
/// qubits (plus the posterior-derived candidates in either case).
int default_candidate_count(int dim);

/// A policy mapping the estimation history to the next measurement.
/// Stateful where the protocol requires it (cycles, two-step phases).
class Strategy {
 public:
  virtual ~Strategy() = default;

  /// Next measurement. `ps` may be null for policies that ignore the
  /// posterior; posterior-driven policies throw StateError without one.
  virtual Povm choose_next(const ParticleSet* ps, Rng& rng) = 0;

  /// Outcome feedback (used by two-step to build its first estimate).
  virtual void observe(const MeasurementRecord& record) { (void)record; }

  virtual bool needs_posterior() const { return false; }

  /// self_guided is handled by its own driver, not by this interface.
  static std::unique_ptr<Strategy> create(const StrategySpec& spec, int dim,
                                          long n_total);
};

Povm choose_next(Strategy& strategy, const ParticleSet& ps, Rng& rng);

/// Static measurement cycle for a family name ("mub6", "tetrahedron",
/// "pauli_products" or a Platonic solid).
std::vector<Povm> measurement_cycle(const std::string& family, int dim);

// --- two-step schedules -----------------------------------------------------

struct TwoStepPlan {
  long n0 = 0;
  bool has_phase2 = false;
  std::array<Eigen::Vector3d, 3> axes{};          // rotated x', y', z'
  std::array<double, 3> axis_probabilities{};     // z' aligned with estimate
  bool weighted = false;                          // guo draws axes i.i.d.

  /// Phase-2 measurement along axis k; throws StateError before the first
  /// estimate is available.
  Povm phase2_measurement(int axis) const;
};

/// N0 = round(N^{2/3}) for bagan (and guo), N/2 for worst_case. With a
/// first estimate the plan carries the rotated frame (z' along the top
/// eigenvector) and, for guo, the axis probabilities
/// p1 = p2 = 1/(2+sqrt(1-s^2)), p3 = sqrt(1-s^2)/(2+sqrt(1-s^2)).
TwoStepPlan two_step_schedule(long n_total, TwoStepVariant variant,
                              const std::optional<DensityMatrix>&
                                  first_estimate);

/// Tetrahedron POVM with a_1 along the posterior-mean Bloch direction
/// (canonical orientation for a maximally mixed estimate).
Povm aligned_tetrahedron(const ParticleSet& ps);

// --- self-guided -------------------------------------------------------------

struct SelfGuidedState {
  PureState psi;
  long iteration = 1;
};

/// Measured infidelity of the projector onto `probe`: the fraction of
/// failed projections over `shots` shots (an exact oracle may ignore the
/// shot count).
using InfidelityOracle =
    std::function<double(const PureState& probe, int shots, Rng& rng)>;

InfidelityOracle exact_infidelity_oracle(const DensityMatrix& truth);
InfidelityOracle sampled_infidelity_oracle(const DensityMatrix& truth);

SelfGuidedState self_guided_init(int dim, Rng& rng);

struct SelfGuidedOptions {
  int max_retries = 8;
  /// Test hook: fixes the +-1 perturbation instead of drawing it.
  std::optional<RealVector> forced_delta;
};

/// One simultaneous-perturbation step with gain schedules
/// eps_n = n^{-1/3}, alpha_n = n^{-1}: probes |psi +- eps_n Delta_n>,
/// gradient estimate g_n = (f_+ - f_-) / (2 eps_n) Delta_n and descent
/// update psi <- normalize(psi - alpha_n g_n), global phase gauge-fixed.
SelfGuidedState self_guided_step(const SelfGuidedState& state,
                                 int shots_per_eval,
                                 const InfidelityOracle& oracle, Rng& rng,
                                 const SelfGuidedOptions& options = {});

/// Multiply by a global phase making the first nonzero amplitude real
/// positive.
PureState gauge_fixed(const PureState& psi);

}  // namespace qtomo

#endif  // QTOMO_CORE_ADAPTIVE_HPP
