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

#ifndef QTOMO_CORE_PARTICLE_FILTER_HPP
#define QTOMO_CORE_PARTICLE_FILTER_HPP

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "core/measurement.hpp"
#include "core/mvee.hpp"
#include "core/random_states.hpp"

namespace qtomo {

struct DegeneratePosteriorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ResampleMethod { liu_west, metropolis_hastings };

struct ResampleParams {
  double liu_west_a = 0.98;
  int mh_steps = 30;
  double mh_step_scale = 0.2;
};

/// When to resample inside smc_update: ESS below ess_fraction * n.
struct SmcPolicy {
  double ess_fraction = 0.5;
  ResampleMethod method = ResampleMethod::liu_west;
  ResampleParams params;
};

/// Weighted sample approximation of the Bayesian posterior over states.
/// A value type: updates and resampling produce new sets (the particle
/// cloud is shared immutably, so untouched updates are cheap, and the
/// recorded history is a shared cons list, so appending is O(1) and update
/// cost is independent of history length).
class ParticleSet {
 public:
  int dim() const { return prior_.dim; }
  int size() const { return static_cast<int>(weights_.size()); }
  const RealVector& weights() const { return weights_; }
  /// Row s holds the generalized Bloch coordinates of particle s.
  const RealMatrix& coords() const;
  const DensityMatrix& particle(int s) const;
  long history_length() const { return history_length_; }
  const PriorSpec& prior() const { return prior_; }
  const SmcPolicy& policy() const { return policy_; }
  long resample_count() const { return resample_count_; }

  /// Posterior-mean generalized Bloch coordinates (the BME coordinates).
  RealVector mean_coords() const;

  bool has_latents() const;

 private:
  struct Cloud {
    std::vector<DensityMatrix> particles;
    RealMatrix coords;
    std::vector<StateLatent> latents;  // empty unless MH maintains them
  };
  struct HistoryNode {
    MeasurementRecord record;
    std::shared_ptr<const HistoryNode> prev;
  };

  std::shared_ptr<const Cloud> cloud_;
  RealVector weights_;
  std::shared_ptr<const HistoryNode> history_;
  long history_length_ = 0;
  Rng rng_{0};
  PriorSpec prior_;
  SmcPolicy policy_;
  long resample_count_ = 0;

  static ParticleSet liu_west_impl(ParticleSet ps,
                                   const ResampleParams& params);
  static ParticleSet metropolis_impl(ParticleSet ps,
                                     const ResampleParams& params);

  friend ParticleSet smc_init(const PriorSpec&, int, std::uint64_t,
                              const SmcPolicy&);
  friend ParticleSet smc_update(ParticleSet, const MeasurementRecord&);
  friend ParticleSet resample(ParticleSet, ResampleMethod,
                              const ResampleParams&);
  friend ParticleSet particle_set_from_snapshot(std::vector<DensityMatrix>,
                                                RealVector, const PriorSpec&,
                                                const SmcPolicy&,
                                                std::uint64_t);
  friend std::vector<MeasurementRecord> recorded_history(const ParticleSet&);
};

/// Equal-weight particles drawn i.i.d. from the prior. Latent coordinates
/// are kept when the policy resamples via Metropolis-Hastings.
ParticleSet smc_init(const PriorSpec& prior, int n_particles,
                     std::uint64_t seed, const SmcPolicy& policy = {});

/// Bayes weight update w_s <- w_s Tr(M_outcome rho_s) (renormalized);
/// resamples automatically when the ESS drops below the policy threshold.
/// Throws DegeneratePosteriorError when every particle assigns zero
/// probability to the observed outcome.
ParticleSet smc_update(ParticleSet ps, const MeasurementRecord& record);

/// 1 / sum w_s^2, in [1, n].
double effective_sample_size(const ParticleSet& ps);

/// Equal-weight resampling. liu_west: multinomial selection, shrinkage
/// toward the weighted mean in generalized Bloch coordinates plus Gaussian
/// noise of covariance (1-a^2) Cov, then projection to the physical set.
/// metropolis_hastings: a random-walk chain per selected particle in
/// prior-native latent coordinates targeting prior x full recorded
/// likelihood.
ParticleSet resample(ParticleSet ps, ResampleMethod method,
                     const ResampleParams& params = {});

/// Posterior mean sum_s w_s rho_s.
DensityMatrix bme(const ParticleSet& ps);

struct CredibleEllipsoid {
  RealVector center;   // generalized Bloch coordinates
  RealMatrix shape;    // (x-c)^T shape (x-c) <= 1
  double mass = 0.0;   // achieved weight sum, >= 1 - alpha
  bool degenerate = false;
};

/// Highest-weight particles holding mass >= 1-alpha, wrapped in their
/// minimum-volume enclosing ellipsoid (Khachiyan iteration, tol 1e-4).
CredibleEllipsoid credible_region(const ParticleSet& ps, double alpha);

/// Oldest-first copy of the recorded history (test/diagnostic use).
std::vector<MeasurementRecord> recorded_history(const ParticleSet& ps);

/// Rebuild a set from snapshot states (equal latent-free footing).
ParticleSet particle_set_from_snapshot(std::vector<DensityMatrix> particles,
                                       RealVector weights,
                                       const PriorSpec& prior,
                                       const SmcPolicy& policy,
                                       std::uint64_t seed);

// --- snapshot text format -------------------------------------------------
// One particle per line: weight followed by the row-major complex entries
// as "re im" pairs, space separated, full double precision.

void save_particles(std::ostream& os, const std::vector<DensityMatrix>& states,
                    const RealVector& weights);
void save_particles(const std::string& path, const ParticleSet& ps);

struct ParticleSnapshot {
  std::vector<DensityMatrix> states;
  RealVector weights;
};

/// Parses and validates a snapshot (state invariants, weight sum within
/// 1e-6 of 1; weights are renormalized exactly).
ParticleSnapshot load_particles(std::istream& is);
ParticleSnapshot load_particles_file(const std::string& path);

}  // namespace qtomo

#endif  // QTOMO_CORE_PARTICLE_FILTER_HPP
