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

#include "core/adaptive.hpp"

#include <algorithm>
#include <cmath>

#include "core/estimators.hpp"

namespace qtomo {

namespace {

constexpr double kInvLn2 = 1.4426950408889634;  // 1/ln 2

double entropy_bits(const RealVector& p) {
  double h = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k)
    if (p(k) > 0.0) h -= p(k) * std::log(p(k));
  return h * kInvLn2;
}

double binary_entropy_bits(double p) {
  p = std::clamp(p, 0.0, 1.0);
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
  return h * kInvLn2;
}

/// Outcome probabilities of every particle: column k holds
/// Tr(M_k rho_s) over s.
RealMatrix particle_outcome_probabilities(const ParticleSet& ps,
                                          const Povm& m) {
  RealMatrix p(ps.size(), m.n_outcomes());
  for (int k = 0; k < m.n_outcomes(); ++k)
    p.col(k) = (ps.coords() * m.coords(k)).array() + m.coord_offset(k);
  return p.cwiseMax(0.0).cwiseMin(1.0);
}

double lambda_max_of_coords(int dim, const RealVector& coords) {
  if (dim == 2) {
    // (1 + |s|)/2 for a qubit.
    return 0.5 * (1.0 + std::min(coords.norm(), 1.0));
  }
  const RealVector lam =
      hermitian_eigenvalues(matrix_from_coordinates(dim, coords));
  return lam.maxCoeff();
}

}  // namespace

RealVector predictive_probabilities(const ParticleSet& ps, const Povm& m) {
  if (ps.dim() != m.dim())
    throw DimensionError("particle set and POVM dimensions do not match");
  const RealVector mean = ps.mean_coords();
  RealVector p(m.n_outcomes());
  for (int k = 0; k < m.n_outcomes(); ++k)
    p(k) = m.coord_offset(k) + m.coords(k).dot(mean);
  p = p.cwiseMax(0.0);
  const double total = p.sum();
  if (total <= 0.0) throw DomainError("predictive probabilities vanish");
  return p / total;
}

double info_gain_utility(const ParticleSet& ps, const Povm& m) {
  const RealVector predictive = predictive_probabilities(ps, m);
  const RealMatrix probs = particle_outcome_probabilities(ps, m);
  double expected = 0.0;
  for (int s = 0; s < ps.size(); ++s)
    expected += ps.weights()(s) * entropy_bits(probs.row(s).transpose());
  return entropy_bits(predictive) - expected;
}

double fidelity_utility(const ParticleSet& ps, const Povm& m) {
  if (ps.dim() != m.dim())
    throw DimensionError("particle set and POVM dimensions do not match");
  const RealMatrix probs = particle_outcome_probabilities(ps, m);
  double utility = 0.0;
  for (int k = 0; k < m.n_outcomes(); ++k) {
    const RealVector branch_weights =
        ps.weights().cwiseProduct(probs.col(k));
    const double q = branch_weights.sum();
    if (q <= 1e-300) continue;
    const RealVector mean_after = (ps.coords().transpose() * branch_weights) / q;
    utility += q * lambda_max_of_coords(ps.dim(), mean_after);
  }
  return utility;
}

int pick_argmax_uniform(const RealVector& utilities, Rng& rng) {
  if (utilities.size() == 0)
    throw ConfigurationError("empty candidate set");
  const double best = utilities.maxCoeff();
  int ties = 0;
  for (Eigen::Index k = 0; k < utilities.size(); ++k)
    if (utilities(k) == best) ++ties;
  if (ties == 1) {
    Eigen::Index k;
    utilities.maxCoeff(&k);
    return static_cast<int>(k);
  }
  std::uint64_t pick = rng.uniform_index(static_cast<std::uint64_t>(ties));
  for (Eigen::Index k = 0; k < utilities.size(); ++k) {
    if (utilities(k) != best) continue;
    if (pick == 0) return static_cast<int>(k);
    --pick;
  }
  return 0;
}

const char* strategy_kind_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::static_cycle: return "static_cycle";
    case StrategyKind::random_haar: return "random_haar";
    case StrategyKind::two_step: return "two_step";
    case StrategyKind::two_step_guo: return "two_step_guo";
    case StrategyKind::info_gain: return "info_gain";
    case StrategyKind::fidelity_utility: return "fidelity_utility";
    case StrategyKind::aligned_tetrahedron: return "aligned_tetrahedron";
    case StrategyKind::self_guided: return "self_guided";
  }
  return "?";
}

std::optional<StrategyKind> strategy_kind_from_name(const std::string& name) {
  for (StrategyKind kind :
       {StrategyKind::static_cycle, StrategyKind::random_haar,
        StrategyKind::two_step, StrategyKind::two_step_guo,
        StrategyKind::info_gain, StrategyKind::fidelity_utility,
        StrategyKind::aligned_tetrahedron, StrategyKind::self_guided})
    if (name == strategy_kind_name(kind)) return kind;
  return std::nullopt;
}

int default_candidate_count(int dim) { return dim == 2 ? 30 : 60; }

std::vector<Povm> measurement_cycle(const std::string& family, int dim) {
  if (dim == 2) {
    if (family == "mub6") return mub6_measurements();
    if (family == "tetrahedron") {
      std::vector<Povm> out;
      out.push_back(tetrahedron_povm());
      return out;
    }
    for (PlatonicSolid solid :
         {PlatonicSolid::octahedron, PlatonicSolid::cube,
          PlatonicSolid::icosahedron, PlatonicSolid::dodecahedron})
      if (family == platonic_name(solid)) return platonic_measurements(solid);
  } else if (dim == 4) {
    if (family == "pauli_products") return pauli_product_measurements();
  }
  throw ConfigurationError("unknown measurement cycle '" + family +
                           "' for dim " + std::to_string(dim));
}

void validate_strategy_spec(const StrategySpec& spec, int dim) {
  if (dim != 2 && dim != 4)
    throw ConfigurationError("strategy dim must be 2 or 4");
  switch (spec.kind) {
    case StrategyKind::static_cycle:
      (void)measurement_cycle(spec.cycle, dim);
      break;
    case StrategyKind::random_haar:
      break;
    case StrategyKind::two_step:
      if (spec.n0_rule == TwoStepVariant::guo)
        throw ConfigurationError(
            "use kind two_step_guo for the weighted second phase");
      [[fallthrough]];
    case StrategyKind::two_step_guo:
      if (dim != 2)
        throw ConfigurationError("two-step protocols are qubit protocols");
      break;
    case StrategyKind::info_gain:
    case StrategyKind::fidelity_utility:
      if (spec.candidate_count < 0)
        throw ConfigurationError("candidate count must be positive");
      break;
    case StrategyKind::aligned_tetrahedron:
      if (dim != 2)
        throw ConfigurationError("aligned_tetrahedron is a qubit protocol");
      break;
    case StrategyKind::self_guided:
      if (spec.shots_per_eval < 1)
        throw ConfigurationError("shots_per_eval must be >= 1");
      break;
  }
}

// --- two-step ---------------------------------------------------------------

Povm TwoStepPlan::phase2_measurement(int axis) const {
  if (!has_phase2)
    throw StateError("phase-2 measurement requested without a first estimate");
  if (axis < 0 || axis > 2) throw DomainError("axis must be 0, 1 or 2");
  const char* names[3] = {"two_step:x'", "two_step:y'", "two_step:z'"};
  return axis_measurement(axes[static_cast<size_t>(axis)], names[axis]);
}

TwoStepPlan two_step_schedule(long n_total, TwoStepVariant variant,
                              const std::optional<DensityMatrix>&
                                  first_estimate) {
  if (n_total < 10)
    throw DomainError("two-step schedules need at least 10 samples");
  TwoStepPlan plan;
  switch (variant) {
    case TwoStepVariant::bagan:
    case TwoStepVariant::guo:
      plan.n0 = std::llround(std::pow(static_cast<double>(n_total), 2.0 / 3.0));
      break;
    case TwoStepVariant::worst_case:
      plan.n0 = n_total / 2;
      break;
  }
  plan.n0 = std::max<long>(plan.n0, 3);
  if (!first_estimate) return plan;

  if (first_estimate->dim() != 2)
    throw DimensionError("two-step schedules rotate qubit frames");
  const BlochVector bloch = bloch_from_density(*first_estimate);
  Eigen::Vector3d dir(bloch.s1, bloch.s2, bloch.s3);
  const double s = std::min(dir.norm(), 1.0);
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  if (dir.norm() > 1e-12) rot = rotation_from_z_to(dir.normalized());
  for (int k = 0; k < 3; ++k)
    plan.axes[static_cast<size_t>(k)] = rot.col(k);
  plan.has_phase2 = true;
  if (variant == TwoStepVariant::guo) {
    const double root = std::sqrt(std::max(0.0, 1.0 - s * s));
    const double denom = 2.0 + root;
    plan.axis_probabilities = {1.0 / denom, 1.0 / denom, root / denom};
    plan.weighted = true;
  } else {
    plan.axis_probabilities = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  }
  return plan;
}

Povm aligned_tetrahedron(const ParticleSet& ps) {
  if (ps.dim() != 2)
    throw DimensionError("aligned_tetrahedron needs a qubit particle set");
  const RealVector s = ps.mean_coords();
  Eigen::Vector3d dir(s(0), s(1), s(2));
  if (dir.norm() < 1e-12) return tetrahedron_povm();  // convention: +z
  return rotated_tetrahedron_povm(dir);
}

// --- strategies -------------------------------------------------------------

namespace {

class StaticCycleStrategy final : public Strategy {
 public:
  explicit StaticCycleStrategy(std::vector<Povm> cycle)
      : cycle_(std::move(cycle)) {}
  Povm choose_next(const ParticleSet*, Rng&) override {
    const Povm& m = cycle_[next_ % cycle_.size()];
    ++next_;
    return m;
  }

 private:
  std::vector<Povm> cycle_;
  size_t next_ = 0;
};

class RandomHaarStrategy final : public Strategy {
 public:
  explicit RandomHaarStrategy(int dim) : dim_(dim) {}
  Povm choose_next(const ParticleSet*, Rng& rng) override {
    return haar_random_projector(dim_, rng);
  }

 private:
  int dim_;
};

class AlignedTetrahedronStrategy final : public Strategy {
 public:
  Povm choose_next(const ParticleSet* ps, Rng&) override {
    if (!ps) throw StateError("aligned_tetrahedron needs the posterior");
    return aligned_tetrahedron(*ps);
  }
  bool needs_posterior() const override { return true; }
};

class TwoStepStrategy final : public Strategy {
 public:
  TwoStepStrategy(TwoStepVariant variant, long n_total)
      : variant_(variant),
        n_total_(n_total),
        mub6_(mub6_measurements()),
        plan_(two_step_schedule(n_total, variant, std::nullopt)) {
    counts_.fill({0, 0});
  }

  Povm choose_next(const ParticleSet*, Rng& rng) override {
    if (step_ < plan_.n0) {
      last_axis_ = static_cast<int>(step_ % 3);
      ++step_;
      return mub6_[static_cast<size_t>(last_axis_)];
    }
    if (!plan_.has_phase2) switch_to_phase2();
    last_axis_ = -1;
    ++step_;
    if (plan_.weighted) {
      const double u = rng.uniform();
      int axis = 0;
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) {
        acc += plan_.axis_probabilities[static_cast<size_t>(k)];
        if (u < acc) {
          axis = k;
          break;
        }
        axis = k;
      }
      return plan_.phase2_measurement(axis);
    }
    return plan_.phase2_measurement(static_cast<int>((step_ - 1) % 3));
  }

  void observe(const MeasurementRecord& record) override {
    if (last_axis_ < 0) return;  // phase 2 ignores feedback
    if (record.outcome == 0)
      ++counts_[static_cast<size_t>(last_axis_)][0];
    else
      ++counts_[static_cast<size_t>(last_axis_)][1];
  }

 private:
  void switch_to_phase2() {
    std::vector<CountVector> counts;
    for (int axis = 0; axis < 3; ++axis) {
      const auto& c = counts_[static_cast<size_t>(axis)];
      if (c[0] + c[1] == 0)
        throw StateError("two-step phase 1 recorded no outcomes");
      counts.emplace_back(axis, std::vector<long>{c[0], c[1]});
    }
    const LinearInversionResult lin = linear_inversion(counts, mub6_);
    const DensityMatrix estimate = project_to_physical(lin.rho_hat);
    plan_ = two_step_schedule(n_total_, variant_, estimate);
  }

  TwoStepVariant variant_;
  long n_total_;
  std::vector<Povm> mub6_;
  TwoStepPlan plan_;
  long step_ = 0;
  int last_axis_ = -1;
  std::array<std::array<long, 2>, 3> counts_{};
};

/// Candidate list: two-outcome projector measurements evaluated in bulk
/// through their effect coordinates.
struct CandidateSet {
  std::vector<PureState> states;          // unconstrained / qubit
  std::vector<std::pair<PureState, PureState>> factor_states;
  RealMatrix coords;                      // C x (d^2-1), first-effect coords
  bool factorized = false;

  int size() const { return static_cast<int>(coords.rows()); }

  Povm materialize(int k) const {
    if (factorized) {
      const auto& [a, b] = factor_states[static_cast<size_t>(k)];
      return factorized_projector(a, b);
    }
    return projector_measurement(states[static_cast<size_t>(k)]);
  }
};

PureState random_pure(int dim, Rng& rng) {
  return PureState::normalized(ginibre(dim, 1, rng).col(0));
}

RealVector projector_coords(const Vector& psi, int dim) {
  const auto& basis = generalized_pauli_basis(dim);
  RealVector c(static_cast<Eigen::Index>(basis.size()));
  for (size_t k = 0; k < basis.size(); ++k)
    c(static_cast<Eigen::Index>(k)) =
        (psi.adjoint() * basis[k] * psi)(0, 0).real() / dim;
  return c;
}

class UtilityStrategy final : public Strategy {
 public:
  UtilityStrategy(const StrategySpec& spec, int dim)
      : spec_(spec), dim_(dim),
        n_random_(spec.candidate_count > 0 ? spec.candidate_count
                                           : default_candidate_count(dim)),
        info_gain_(spec.kind == StrategyKind::info_gain) {}

  bool needs_posterior() const override { return true; }

  Povm choose_next(const ParticleSet* ps, Rng& rng) override {
    if (!ps) throw StateError("utility strategies need the posterior");
    const CandidateSet candidates = build_candidates(*ps, rng);
    if (candidates.size() == 0)
      throw ConfigurationError("empty candidate set");
    const RealVector utilities = evaluate(*ps, candidates);
    const int best = pick_argmax_uniform(utilities, rng);
    return candidates.materialize(best);
  }

 private:
  CandidateSet build_candidates(const ParticleSet& ps, Rng& rng) const {
    CandidateSet set;
    const bool factorized =
        dim_ == 4 && spec_.restriction == CandidateRestriction::factorized;
    set.factorized = factorized;
    std::vector<RealVector> rows;

    if (factorized) {
      for (int k = 0; k < n_random_; ++k)
        set.factor_states.emplace_back(random_pure(2, rng),
                                       random_pure(2, rng));
      // Marginal eigenprojector combinations of the posterior mean.
      const DensityMatrix mean = bme(ps);
      const EigenSystem ea = eigendecompose(partial_trace_qubit(mean, 0));
      const EigenSystem eb = eigendecompose(partial_trace_qubit(mean, 1));
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          set.factor_states.emplace_back(
              PureState::normalized(ea.vectors.col(i)),
              PureState::normalized(eb.vectors.col(j)));
      for (const auto& [a, b] : set.factor_states) {
        Vector joint(4);
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            joint(2 * i + j) = a.vec()(i) * b.vec()(j);
        rows.push_back(projector_coords(joint, 4));
      }
    } else {
      for (int k = 0; k < n_random_; ++k)
        set.states.push_back(random_pure(dim_, rng));
      // Eigenbasis of the posterior mean.
      const EigenSystem es = eigendecompose(bme(ps));
      const int n_eig = dim_ == 2 ? 1 : dim_;
      for (int i = 0; i < n_eig; ++i)
        set.states.push_back(PureState::normalized(es.vectors.col(i)));
      for (const PureState& psi : set.states)
        rows.push_back(projector_coords(psi.vec(), dim_));
    }

    set.coords.resize(static_cast<Eigen::Index>(rows.size()),
                      dim_ * dim_ - 1);
    for (size_t r = 0; r < rows.size(); ++r)
      set.coords.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    return set;
  }

  RealVector evaluate(const ParticleSet& ps,
                      const CandidateSet& candidates) const {
    const double offset = 1.0 / dim_;
    // p0(s, c) for every particle s and candidate c.
    Eigen::ArrayXXd p0 =
        (ps.coords() * candidates.coords.transpose()).array() + offset;
    p0 = p0.max(0.0).min(1.0);
    const RealVector pbar =
        (candidates.coords * ps.mean_coords()).array() + offset;

    RealVector utilities(candidates.size());
    if (info_gain_) {
      const Eigen::ArrayXXd pc = p0.max(1e-300);
      const Eigen::ArrayXXd qc = (1.0 - p0).max(1e-300);
      const Eigen::ArrayXXd h =
          -(pc * pc.log() + qc * qc.log()) * kInvLn2;
      const RealVector expected = h.matrix().transpose() * ps.weights();
      for (int c = 0; c < candidates.size(); ++c)
        utilities(c) =
            binary_entropy_bits(std::clamp(pbar(c), 0.0, 1.0)) - expected(c);
    } else {
      const RealVector mean_sum = ps.mean_coords();  // sum_s w_s x_s
      for (int c = 0; c < candidates.size(); ++c) {
        const RealVector branch0 =
            ps.weights().cwiseProduct(p0.col(c).matrix());
        const double q0 = branch0.sum();
        const double q1 = 1.0 - q0;
        const RealVector sum0 = ps.coords().transpose() * branch0;
        double u = 0.0;
        if (q0 > 1e-300)
          u += q0 * lambda_max_of_coords(dim_, RealVector(sum0 / q0));
        if (q1 > 1e-300)
          u += q1 * lambda_max_of_coords(
                        dim_, RealVector((mean_sum - sum0) / q1));
        utilities(c) = u;
      }
    }
    return utilities;
  }

  StrategySpec spec_;
  int dim_;
  int n_random_;
  bool info_gain_;
};

}  // namespace

std::unique_ptr<Strategy> Strategy::create(const StrategySpec& spec, int dim,
                                           long n_total) {
  validate_strategy_spec(spec, dim);
  switch (spec.kind) {
    case StrategyKind::static_cycle:
      return std::make_unique<StaticCycleStrategy>(
          measurement_cycle(spec.cycle, dim));
    case StrategyKind::random_haar:
      return std::make_unique<RandomHaarStrategy>(dim);
    case StrategyKind::two_step:
    case StrategyKind::two_step_guo: {
      const TwoStepVariant variant = spec.kind == StrategyKind::two_step_guo
                                         ? TwoStepVariant::guo
                                         : spec.n0_rule;
      return std::make_unique<TwoStepStrategy>(variant, n_total);
    }
    case StrategyKind::info_gain:
    case StrategyKind::fidelity_utility:
      return std::make_unique<UtilityStrategy>(spec, dim);
    case StrategyKind::aligned_tetrahedron:
      return std::make_unique<AlignedTetrahedronStrategy>();
    case StrategyKind::self_guided:
      throw ConfigurationError(
          "self_guided measurements are generated by the self-guided driver");
  }
  throw ConfigurationError("unknown strategy kind");
}

Povm choose_next(Strategy& strategy, const ParticleSet& ps, Rng& rng) {
  return strategy.choose_next(&ps, rng);
}

// --- self-guided -------------------------------------------------------------

PureState gauge_fixed(const PureState& psi) {
  const Vector& v = psi.vec();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > 1e-12) return PureState::trusted(v * (std::conj(v(i)) / a));
  }
  return psi;
}

InfidelityOracle exact_infidelity_oracle(const DensityMatrix& truth) {
  return [truth](const PureState& probe, int, Rng&) {
    const double p =
        (probe.vec().adjoint() * truth.mat() * probe.vec())(0, 0).real();
    return std::clamp(1.0 - p, 0.0, 1.0);
  };
}

InfidelityOracle sampled_infidelity_oracle(const DensityMatrix& truth) {
  return [truth](const PureState& probe, int shots, Rng& rng) {
    const double p_fail = std::clamp(
        1.0 - (probe.vec().adjoint() * truth.mat() * probe.vec())(0, 0).real(),
        0.0, 1.0);
    long failures = 0;
    for (int k = 0; k < shots; ++k)
      if (rng.uniform() < p_fail) ++failures;
    return static_cast<double>(failures) / static_cast<double>(shots);
  };
}

SelfGuidedState self_guided_init(int dim, Rng& rng) {
  return SelfGuidedState{gauge_fixed(random_pure(dim, rng)), 1};
}

SelfGuidedState self_guided_step(const SelfGuidedState& state,
                                 int shots_per_eval,
                                 const InfidelityOracle& oracle, Rng& rng,
                                 const SelfGuidedOptions& options) {
  if (shots_per_eval < 1) throw DomainError("shots_per_eval must be >= 1");
  const double n = static_cast<double>(state.iteration);
  const double eps = std::pow(n, -1.0 / 3.0);
  const double gain = 1.0 / n;
  const int dim = state.psi.dim();

  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    RealVector delta(2 * dim);
    if (options.forced_delta) {
      if (options.forced_delta->size() != 2 * dim)
        throw DomainError("forced delta has wrong length");
      delta = *options.forced_delta;
    } else {
      for (Eigen::Index i = 0; i < delta.size(); ++i)
        delta(i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
    }
    Vector complex_delta(dim);
    for (int j = 0; j < dim; ++j)
      complex_delta(j) = Complex(delta(2 * j), delta(2 * j + 1));

    const Vector plus = state.psi.vec() + eps * complex_delta;
    const Vector minus = state.psi.vec() - eps * complex_delta;
    if (plus.norm() < 1e-9 || minus.norm() < 1e-9) continue;

    const double f_plus =
        oracle(PureState::trusted(plus / plus.norm()), shots_per_eval, rng);
    const double f_minus =
        oracle(PureState::trusted(minus / minus.norm()), shots_per_eval, rng);

    // Gradient estimate of the measured infidelity; descend.
    const double slope = (f_plus - f_minus) / (2.0 * eps);
    const Vector updated = state.psi.vec() - gain * slope * complex_delta;
    if (updated.norm() < 1e-9) continue;
    return SelfGuidedState{gauge_fixed(PureState::normalized(updated)),
                           state.iteration + 1};
  }
  throw StateError("self-guided update degenerated repeatedly");
}

}  // namespace qtomo
