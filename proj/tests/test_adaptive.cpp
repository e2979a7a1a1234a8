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
#include "doctest.h"
#include "test_support.hpp"

using namespace qtomo;
using namespace qtomo::testing;

namespace {

ParticleSet two_particle_z_set() {
  std::vector<DensityMatrix> particles{basis_state(2, 0).projector(),
                                       basis_state(2, 1).projector()};
  RealVector w(2);
  w << 0.5, 0.5;
  SmcPolicy policy;
  policy.ess_fraction = 0.0;
  return particle_set_from_snapshot(particles, w,
                                    {PriorKind::bures_uniform, 2}, policy, 7);
}

ParticleSet random_set(int n, int dim, std::uint64_t seed) {
  SmcPolicy policy;
  policy.ess_fraction = 0.0;
  return smc_init({PriorKind::bures_uniform, dim}, n, seed, policy);
}

/// Entropy-difference form evaluated the expensive way: enumerate every
/// outcome, update the weight distribution over particles, and take the
/// entropy of those posterior weights.
double info_gain_by_posterior_enumeration(const ParticleSet& ps,
                                          const Povm& m) {
  auto entropy = [](const RealVector& p) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
      if (p(i) > 0.0) h -= p(i) * std::log2(p(i));
    return h;
  };
  const double prior_entropy = entropy(ps.weights());
  double expected_posterior_entropy = 0.0;
  for (int k = 0; k < m.n_outcomes(); ++k) {
    RealVector posterior(ps.size());
    for (int s = 0; s < ps.size(); ++s)
      posterior(s) =
          ps.weights()(s) * born_probabilities(ps.particle(s), m)(k);
    const double evidence = posterior.sum();
    if (evidence <= 0.0) continue;
    posterior /= evidence;
    expected_posterior_entropy += evidence * entropy(posterior);
  }
  return prior_entropy - expected_posterior_entropy;
}

}  // namespace

TEST_CASE("predictive probabilities") {
  const auto mub6 = mub6_measurements();

  // A single-dominant-weight set reproduces that particle's Born rule.
  Rng rng(5);
  std::vector<DensityMatrix> particles{
      random_state(PriorKind::bures_uniform, 2, rng),
      random_state(PriorKind::bures_uniform, 2, rng)};
  RealVector w(2);
  w << 1.0, 0.0;
  ParticleSet single = particle_set_from_snapshot(
      particles, w, {PriorKind::bures_uniform, 2}, SmcPolicy{}, 1);
  for (const Povm& m : mub6) {
    const RealVector lhs = predictive_probabilities(single, m);
    const RealVector rhs = born_probabilities(particles[0], m);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }

  // Equal mix of |0><0| and |1><1| under z: (1/2, 1/2).
  const ParticleSet pair = two_particle_z_set();
  const RealVector p = predictive_probabilities(pair, mub6[2]);
  CHECK(p(0) == doctest::Approx(0.5).epsilon(1e-12));

  // Matches the direct weighted sum over particles.
  const ParticleSet cloud = random_set(60, 2, 19);
  for (const Povm& m : mub6) {
    RealVector direct = RealVector::Zero(2);
    for (int s = 0; s < cloud.size(); ++s)
      direct += cloud.weights()(s) * born_probabilities(cloud.particle(s), m);
    CHECK((predictive_probabilities(cloud, m) - direct).cwiseAbs().maxCoeff() <
          1e-10);
  }
}

TEST_CASE("information gain utility") {
  const auto mub6 = mub6_measurements();
  const ParticleSet pair = two_particle_z_set();

  // z distinguishes the two particles perfectly: one bit.
  CHECK(info_gain_utility(pair, mub6[2]) ==
        doctest::Approx(1.0).epsilon(1e-12));
  // x tells nothing: both particles predict (1/2, 1/2).
  CHECK(info_gain_utility(pair, mub6[0]) ==
        doctest::Approx(0.0).epsilon(1e-12));

  // A single-particle posterior has nothing to learn.
  Rng rng(11);
  std::vector<DensityMatrix> one{random_state(PriorKind::bures_uniform, 2, rng),
                                 random_state(PriorKind::bures_uniform, 2, rng)};
  RealVector w(2);
  w << 1.0, 0.0;
  const ParticleSet single = particle_set_from_snapshot(
      one, w, {PriorKind::bures_uniform, 2}, SmcPolicy{}, 1);
  for (const Povm& m : mub6)
    CHECK(std::abs(info_gain_utility(single, m)) < 1e-12);
}

TEST_CASE("outcome-entropy and posterior-entropy forms agree") {
  // The two rewritings of the information gain, compared by brute force on
  // small sets and two-outcome measurements.
  Rng rng(71);
  for (int trial = 0; trial < 25; ++trial) {
    const int dim = trial % 2 == 0 ? 2 : 4;
    const ParticleSet ps = random_set(10, dim, 300 + trial);
    const Povm m = haar_random_projector(dim, rng);
    const double fast = info_gain_utility(ps, m);
    const double slow = info_gain_by_posterior_enumeration(ps, m);
    CHECK(std::abs(fast - slow) < 1e-10);
    CHECK(fast >= -1e-12);
  }
}

TEST_CASE("fidelity utility") {
  const auto mub6 = mub6_measurements();

  // Single pure particle: utility 1 for every measurement.
  Rng rng(23);
  std::vector<DensityMatrix> pure{random_state(PriorKind::haar_pure, 2, rng),
                                  random_state(PriorKind::haar_pure, 2, rng)};
  RealVector w(2);
  w << 1.0, 0.0;
  const ParticleSet single = particle_set_from_snapshot(
      pure, w, {PriorKind::bures_uniform, 2}, SmcPolicy{}, 1);
  for (const Povm& m : mub6)
    CHECK(fidelity_utility(single, m) == doctest::Approx(1.0).epsilon(1e-10));

  // Two orthogonal pure particles and the z measurement: each branch
  // collapses onto a pure particle.
  const ParticleSet pair = two_particle_z_set();
  CHECK(fidelity_utility(pair, mub6[2]) ==
        doctest::Approx(1.0).epsilon(1e-12));

  // Bounded by the extreme eigenvalues.
  const ParticleSet cloud = random_set(50, 2, 9);
  for (const Povm& m : mub6) {
    const double u = fidelity_utility(cloud, m);
    CHECK(u >= 0.5 - 1e-12);
    CHECK(u <= 1.0 + 1e-12);
  }
}

TEST_CASE("argmax selection is scale invariant and breaks ties uniformly") {
  Rng rng(31);
  RealVector u(5);
  u << 0.2, 0.9, 0.1, 0.4, 0.10001;
  Rng rng2(31);
  CHECK(pick_argmax_uniform(u, rng) == 1);
  CHECK(pick_argmax_uniform(RealVector(13.7 * u), rng2) == 1);

  RealVector tied(4);
  tied << 1.0, 2.0, 2.0, 0.5;
  int hits1 = 0, hits2 = 0;
  for (int k = 0; k < 2000; ++k) {
    const int pick = pick_argmax_uniform(tied, rng);
    if (pick == 1) ++hits1;
    if (pick == 2) ++hits2;
  }
  CHECK(hits1 + hits2 == 2000);
  CHECK(hits1 > 800);
  CHECK(hits2 > 800);
}

TEST_CASE("choose_next returns valid measurements for every strategy") {
  Rng rng(47);
  for (int dim : {2, 4}) {
    std::vector<StrategySpec> specs;
    {
      StrategySpec s;
      s.kind = StrategyKind::static_cycle;
      s.cycle = dim == 2 ? "mub6" : "pauli_products";
      specs.push_back(s);
    }
    {
      StrategySpec s;
      s.kind = StrategyKind::random_haar;
      specs.push_back(s);
    }
    {
      StrategySpec s;
      s.kind = StrategyKind::info_gain;
      s.candidate_count = 8;
      specs.push_back(s);
    }
    {
      StrategySpec s;
      s.kind = StrategyKind::fidelity_utility;
      s.candidate_count = 8;
      if (dim == 4) s.restriction = CandidateRestriction::factorized;
      specs.push_back(s);
    }
    if (dim == 2) {
      StrategySpec s;
      s.kind = StrategyKind::two_step;
      specs.push_back(s);
      s.kind = StrategyKind::two_step_guo;
      specs.push_back(s);
      s.kind = StrategyKind::aligned_tetrahedron;
      specs.push_back(s);
    }

    ParticleSet ps = random_set(40, dim, 99);
    for (const StrategySpec& spec : specs) {
      auto strategy = Strategy::create(spec, dim, 1000);
      for (int step = 0; step < 12; ++step) {
        const Povm m = choose_next(*strategy, ps, rng);
        CHECK(m.dim() == dim);
        Matrix sum = Matrix::Zero(dim, dim);
        for (int k = 0; k < m.n_outcomes(); ++k) {
          CHECK(hermitian_eigenvalues(m.effect(k)).minCoeff() >= -1e-10);
          sum += m.effect(k);
        }
        CHECK((sum - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff() <
              1e-10);
        strategy->observe({std::make_shared<const Povm>(m), 0});
      }
    }
  }
}

TEST_CASE("info gain picks the discriminating axis") {
  // On the z-distinguishable pair the z measurement carries 1 bit, x and y
  // carry none; with the posterior eigenbasis candidate z must win.
  const ParticleSet pair = two_particle_z_set();
  StrategySpec spec;
  spec.kind = StrategyKind::info_gain;
  spec.candidate_count = 25;
  auto strategy = Strategy::create(spec, 2, 1000);
  Rng rng(3);
  int z_wins = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const Povm m = choose_next(*strategy, pair, rng);
    const double u = info_gain_utility(pair, m);
    CHECK(u >= info_gain_utility(pair, mub6_measurements()[0]) - 1e-12);
    BlochVector axis;
    axis.s1 = 2.0 * m.effect(0)(1, 0).real();
    axis.s2 = 2.0 * m.effect(0)(1, 0).imag();
    axis.s3 = (m.effect(0)(0, 0) - m.effect(0)(1, 1)).real();
    if (std::abs(axis.s3) > 0.999) ++z_wins;
  }
  // The BME eigenbasis candidate aligns with z, so z-aligned projectors
  // dominate the argmax.
  CHECK(z_wins == 20);
}

TEST_CASE("random_haar choices are seed reproducible and posterior blind") {
  StrategySpec spec;
  spec.kind = StrategyKind::random_haar;
  auto s1 = Strategy::create(spec, 2, 100);
  auto s2 = Strategy::create(spec, 2, 100);
  ParticleSet ps_a = random_set(10, 2, 1);
  ParticleSet ps_b = random_set(10, 2, 2);
  Rng rng_a(5), rng_b(5);
  for (int k = 0; k < 10; ++k) {
    const Povm m_a = choose_next(*s1, ps_a, rng_a);
    const Povm m_b = choose_next(*s2, ps_b, rng_b);
    CHECK((m_a.effect(0) - m_b.effect(0)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("factorized candidates are tensor products") {
  StrategySpec spec;
  spec.kind = StrategyKind::info_gain;
  spec.candidate_count = 10;
  spec.restriction = CandidateRestriction::factorized;
  auto strategy = Strategy::create(spec, 4, 1000);
  ParticleSet ps = random_set(60, 4, 77);
  Rng rng(13);
  for (int step = 0; step < 10; ++step) {
    const Povm m = choose_next(*strategy, ps, rng);
    // Schmidt test: reshape the projector state to a 2x2 amplitude matrix;
    // a product state has rank 1 (second singular value 0).
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.effect(0));
    Eigen::Index top;
    es.eigenvalues().maxCoeff(&top);
    const Vector psi = es.eigenvectors().col(top);
    Matrix amp(2, 2);
    amp << psi(0), psi(1), psi(2), psi(3);
    Eigen::JacobiSVD<Matrix> svd(amp);
    CHECK(svd.singularValues()(1) < 1e-10);
  }
}

TEST_CASE("two-step schedules") {
  // Rounded N^{2/3} for the vanishing-fraction rule.
  CHECK(two_step_schedule(10000, TwoStepVariant::bagan, std::nullopt).n0 ==
        464);
  CHECK(two_step_schedule(10000, TwoStepVariant::worst_case, std::nullopt)
            .n0 == 5000);
  CHECK(two_step_schedule(10000, TwoStepVariant::guo, std::nullopt).n0 == 464);
  CHECK_THROWS_AS(
      (void)two_step_schedule(5, TwoStepVariant::bagan, std::nullopt),
      DomainError);

  // Phase 2 without an estimate is a state error.
  const TwoStepPlan unprimed =
      two_step_schedule(1000, TwoStepVariant::bagan, std::nullopt);
  CHECK_THROWS_AS((void)unprimed.phase2_measurement(0), StateError);

  // The rotated frame aligns z' with the top eigenvector direction.
  const DensityMatrix estimate = qubit_from_bloch(0.6, 0.0, 0.0);
  const TwoStepPlan plan =
      two_step_schedule(1000, TwoStepVariant::bagan, estimate);
  CHECK(plan.axes[2].dot(Eigen::Vector3d(1, 0, 0)) ==
        doctest::Approx(1.0).epsilon(1e-12));
  const Povm zprime = plan.phase2_measurement(2);
  const DensityMatrix plus_x = qubit_from_bloch(1, 0, 0);
  CHECK(born_probabilities(plus_x, zprime)(0) ==
        doctest::Approx(1.0).epsilon(1e-10));

  // Guo probabilities: pure estimate kills the aligned axis.
  const TwoStepPlan guo_pure = two_step_schedule(
      1000, TwoStepVariant::guo, qubit_from_bloch(0, 0, 1));
  CHECK(guo_pure.axis_probabilities[0] == doctest::Approx(0.5));
  CHECK(guo_pure.axis_probabilities[1] == doctest::Approx(0.5));
  CHECK(guo_pure.axis_probabilities[2] == doctest::Approx(0.0));

  const TwoStepPlan guo_mixed = two_step_schedule(
      1000, TwoStepVariant::guo, qubit_from_bloch(0, 0, 0.6));
  const double root = std::sqrt(1 - 0.36);
  CHECK(guo_mixed.axis_probabilities[0] ==
        doctest::Approx(1.0 / (2.0 + root)).epsilon(1e-12));
  CHECK(guo_mixed.axis_probabilities[2] ==
        doctest::Approx(root / (2.0 + root)).epsilon(1e-12));
}

TEST_CASE("aligned tetrahedron") {
  // BME = |0><0| keeps the canonical orientation.
  std::vector<DensityMatrix> z{basis_state(2, 0).projector(),
                               basis_state(2, 0).projector()};
  RealVector w(2);
  w << 0.5, 0.5;
  ParticleSet ps_z = particle_set_from_snapshot(
      z, w, {PriorKind::bures_uniform, 2}, SmcPolicy{}, 1);
  const Povm aligned = aligned_tetrahedron(ps_z);
  const Povm canonical = tetrahedron_povm();
  for (int k = 0; k < 4; ++k)
    CHECK((aligned.effect(k) - canonical.effect(k)).cwiseAbs().maxCoeff() <
          1e-12);

  // Maximally mixed BME: canonical orientation by convention.
  const ParticleSet pair = two_particle_z_set();
  const Povm neutral = aligned_tetrahedron(pair);
  for (int k = 0; k < 4; ++k)
    CHECK((neutral.effect(k) - canonical.effect(k)).cwiseAbs().maxCoeff() <
          1e-12);

  // Rotation preserves the Gram matrix for a generic posterior.
  ParticleSet cloud = random_set(80, 2, 5);
  const Povm rotated = aligned_tetrahedron(cloud);
  std::vector<Eigen::Vector3d> dirs;
  for (int k = 0; k < 4; ++k) {
    const Matrix e = 2.0 * rotated.effect(k);
    dirs.emplace_back(2.0 * e(1, 0).real(), 2.0 * e(1, 0).imag(),
                      (e(0, 0) - e(1, 1)).real());
  }
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(dirs[static_cast<size_t>(i)].dot(dirs[static_cast<size_t>(j)]) ==
            doctest::Approx(i == j ? 1.0 : -1.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("self-guided steps") {
  Rng rng(8);
  const DensityMatrix truth = random_state(PriorKind::haar_pure, 2, rng);
  const InfidelityOracle exact = exact_infidelity_oracle(truth);

  // Delta and -Delta give the same update direction.
  {
    SelfGuidedState state = self_guided_init(2, rng);
    RealVector delta(4);
    delta << 1, -1, 1, 1;
    SelfGuidedOptions opt_plus;
    opt_plus.forced_delta = delta;
    SelfGuidedOptions opt_minus;
    opt_minus.forced_delta = RealVector(-delta);
    Rng rng_a(1), rng_b(1);
    const SelfGuidedState next_plus =
        self_guided_step(state, 10, exact, rng_a, opt_plus);
    const SelfGuidedState next_minus =
        self_guided_step(state, 10, exact, rng_b, opt_minus);
    CHECK((next_plus.psi.vec() - next_minus.psi.vec()).norm() < 1e-12);
    CHECK(next_plus.iteration == state.iteration + 1);
  }

  // At the optimum with an exact oracle the update stays near the state:
  // f_{+-} are both O(eps^2), so the step is O(alpha * eps).
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(truth.mat());
    Eigen::Index top;
    es.eigenvalues().maxCoeff(&top);
    SelfGuidedState at_optimum{
        gauge_fixed(PureState::normalized(es.eigenvectors().col(top))), 100};
    const SelfGuidedState next =
        self_guided_step(at_optimum, 1, exact, rng);
    const double overlap =
        std::abs((next.psi.vec().adjoint() * at_optimum.psi.vec())(0, 0));
    const double eps = std::pow(100.0, -1.0 / 3.0);
    const double alpha = 1.0 / 100.0;
    // Moved angle is bounded by a small multiple of alpha * eps * |Delta|.
    CHECK(std::acos(std::min(1.0, overlap)) < 10.0 * alpha * eps);
  }

  // With the exact oracle the infidelity decreases over 100 iterations for
  // nearly every random qubit pair.
  int improved = 0;
  const int seeds = 40;
  for (int seed = 0; seed < seeds; ++seed) {
    Rng run_rng(500 + static_cast<std::uint64_t>(seed));
    const DensityMatrix target = random_state(PriorKind::haar_pure, 2, run_rng);
    const InfidelityOracle oracle = exact_infidelity_oracle(target);
    SelfGuidedState state = self_guided_init(2, run_rng);
    const double before = 1.0 - fidelity(target, state.psi.projector());
    for (int it = 0; it < 100; ++it)
      state = self_guided_step(state, 1, oracle, run_rng);
    const double after = 1.0 - fidelity(target, state.psi.projector());
    if (after < before) ++improved;
  }
  CHECK(improved >= static_cast<int>(0.95 * seeds));
}

TEST_CASE("self-guided convergence trend with the exact oracle") {
  std::vector<double> at_30, at_300;
  for (int seed = 0; seed < 50; ++seed) {
    Rng rng(9000 + static_cast<std::uint64_t>(seed));
    const DensityMatrix target = random_state(PriorKind::haar_pure, 2, rng);
    const InfidelityOracle oracle = exact_infidelity_oracle(target);
    SelfGuidedState state = self_guided_init(2, rng);
    for (int it = 1; it <= 300; ++it) {
      state = self_guided_step(state, 1, oracle, rng);
      if (it == 30)
        at_30.push_back(1.0 - fidelity(target, state.psi.projector()));
    }
    at_300.push_back(1.0 - fidelity(target, state.psi.projector()));
  }
  std::sort(at_30.begin(), at_30.end());
  std::sort(at_300.begin(), at_300.end());
  CHECK(at_300[25] < at_30[25]);
}

TEST_CASE("strategy validation") {
  StrategySpec bad_cycle;
  bad_cycle.kind = StrategyKind::static_cycle;
  bad_cycle.cycle = "hypercube";
  CHECK_THROWS_AS(validate_strategy_spec(bad_cycle, 2), ConfigurationError);

  StrategySpec two_step_dim4;
  two_step_dim4.kind = StrategyKind::two_step;
  CHECK_THROWS_AS(validate_strategy_spec(two_step_dim4, 4),
                  ConfigurationError);

  StrategySpec self_guided;
  self_guided.kind = StrategyKind::self_guided;
  self_guided.shots_per_eval = 0;
  CHECK_THROWS_AS(validate_strategy_spec(self_guided, 2), ConfigurationError);

  CHECK_THROWS_AS((void)Strategy::create(StrategySpec{StrategyKind::self_guided},
                                         2, 100),
                  ConfigurationError);
}
