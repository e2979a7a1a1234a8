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

#ifndef QTOMO_CORE_EXPERIMENT_HPP
#define QTOMO_CORE_EXPERIMENT_HPP

#include <iosfwd>

#include "core/adaptive.hpp"

namespace qtomo {

enum class EstimatorKind { smc_bme, mle, linear, self_guided };

const char* estimator_kind_name(EstimatorKind kind);
std::optional<EstimatorKind> estimator_kind_from_name(const std::string& name);

struct TruthSource {
  enum class Kind { prior, fixed };
  Kind kind = Kind::prior;
  PriorSpec prior;
  std::optional<DensityMatrix> fixed;
};

struct ExperimentConfig {
  int dim = 2;
  TruthSource truth;
  PriorSpec smc_prior{PriorKind::bures_uniform, 2};
  StrategySpec strategy;
  EstimatorKind estimator = EstimatorKind::smc_bme;
  long n_max = 0;
  std::vector<long> checkpoints;  // strictly increasing, within [1, n_max]
  int replicas = 1;
  std::uint64_t seed = 0;
  int n_particles = 0;  // 0 = dimension default (1000 / 4000)
  SmcPolicy smc_policy;
  double jitter_sigma = 0.0;
  int workers = 1;
};

/// Dimension defaults for the particle count.
int default_particle_count(int dim);

/// Strictly increasing log-spaced checkpoints ending at n_max.
std::vector<long> log_spaced_checkpoints(long n_max, int count);

/// Throws ConfigurationError on any violated invariant.
void validate_config(const ExperimentConfig& cfg);

struct CheckpointMetrics {
  long n = 0;
  double infidelity = 0.0;
  double bures_sq = 0.0;
  double trace_dist = 0.0;
  double hs_dist = 0.0;
  /// Mean posterior squared Bures distance to the BME; NaN when the
  /// estimator keeps no posterior.
  double posterior_size = 0.0;
  double seconds = 0.0;  // wall time since trial start (in-memory only)
};

struct TrialResult {
  int replica = 0;
  std::vector<CheckpointMetrics> checkpoints;
};

/// One simulated tomography trajectory, deterministic in
/// (cfg.seed, replica_index).
TrialResult run_trial(const ExperimentConfig& cfg, int replica_index);

struct EnsembleCurvePoint {
  long n = 0;
  double mean_infidelity = 0.0;
  double se_infidelity = 0.0;
  double median_infidelity = 0.0;
  double mean_bures_sq = 0.0;
  double median_bures_sq = 0.0;
};

struct EnsembleResult {
  std::vector<TrialResult> trials;
  std::vector<EnsembleCurvePoint> curve;
  double wall_seconds = 0.0;
};

/// Runs cfg.replicas trials (a fresh truth per replica when the source is
/// a prior) on cfg.workers threads; aggregation is an ordered reduction,
/// so the output is identical for any worker count.
EnsembleResult run_ensemble(const ExperimentConfig& cfg);

// --- power-law fits ---------------------------------------------------------

struct ScalingFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  long n_lo = 0;
  long n_hi = 0;
  int points = 0;
  double residual_rms = 0.0;
};

/// Least squares on (log N, log y) over the window [n_lo, n_hi]; needs at
/// least 4 points, all positive.
ScalingFit fit_scaling(const std::vector<std::pair<long, double>>& curve,
                       long n_lo, long n_hi);

// --- theoretical bound curves -------------------------------------------------

double gill_massar_infidelity(int dim, double n);      // (9/4)/N or (75/4)/N
double massar_popescu_infidelity(double n);            // 1/(N+2), qubit
double collective_mixed_infidelity(double n);          // (3/4 + 4/(3 pi))/N

struct BoundCurves {
  std::vector<long> n;
  std::vector<double> gill_massar;
  std::vector<double> massar_popescu;    // empty unless dim == 2
  std::vector<double> collective_mixed;  // empty unless dim == 2
};

BoundCurves bound_curves(int dim, const std::vector<long>& n_list);

// --- persistence ---------------------------------------------------------------
// CSV columns: replica,N,infidelity,bures_sq,trace_dist,hs_dist,
// posterior_size,seconds. The seconds column is 0 unless timing output is
// requested, keeping fixed-seed reruns byte-identical.

void write_trials_csv(std::ostream& os, const std::vector<TrialResult>& trials,
                      bool with_timing);

/// Parses a CSV in the schema above into per-replica checkpoint metrics.
std::vector<TrialResult> read_trials_csv(std::istream& is);

/// Mean infidelity per checkpoint of parsed trials (for refitting).
std::vector<std::pair<long, double>> mean_infidelity_curve(
    const std::vector<TrialResult>& trials);

}  // namespace qtomo

#endif  // QTOMO_CORE_EXPERIMENT_HPP
