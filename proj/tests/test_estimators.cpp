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

#include <sstream>

#include "core/estimators.hpp"
#include "core/particle_filter.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace qtomo;
using namespace qtomo::testing;

namespace {

std::vector<CountVector> exact_counts(const DensityMatrix& rho,
                                      const std::vector<Povm>& ms,
                                      long shots_per_setting) {
  // Infinite-statistics limit: counts proportional to Born probabilities.
  std::vector<CountVector> counts;
  for (size_t k = 0; k < ms.size(); ++k) {
    const RealVector p = born_probabilities(rho, ms[k]);
    std::vector<long> c;
    for (int i = 0; i < p.size(); ++i)
      c.push_back(std::llround(p(i) * 1e9));
    counts.emplace_back(static_cast<int>(k), std::move(c));
    (void)shots_per_setting;
  }
  return counts;
}

std::vector<CountVector> sampled_counts(const DensityMatrix& rho,
                                        const std::vector<Povm>& ms,
                                        long shots_per_setting, Rng& rng) {
  std::vector<CountVector> counts;
  for (size_t k = 0; k < ms.size(); ++k) {
    std::vector<long> c(static_cast<size_t>(ms[k].n_outcomes()), 0);
    for (long shot = 0; shot < shots_per_setting; ++shot)
      ++c[static_cast<size_t>(sample_outcome(rho, ms[k], rng))];
    counts.emplace_back(static_cast<int>(k), std::move(c));
  }
  return counts;
}

}  // namespace

TEST_CASE("linear inversion recovers the state from exact frequencies") {
  Rng rng(13);
  const auto mub6 = mub6_measurements();
  for (int k = 0; k < 20; ++k) {
    const DensityMatrix rho = random_state(PriorKind::hs_uniform, 2, rng);
    const LinearInversionResult res =
        linear_inversion(exact_counts(rho, mub6, 0), mub6);
    CHECK(res.physical);
    CHECK((res.rho_hat - rho.mat()).cwiseAbs().maxCoeff() < 1e-8);
  }
  // Also complete for two qubits via Pauli products.
  const auto pp = pauli_product_measurements();
  const DensityMatrix rho4 = random_state(PriorKind::bures_uniform, 4, rng);
  const LinearInversionResult res4 =
      linear_inversion(exact_counts(rho4, pp, 0), pp);
  CHECK((res4.rho_hat - rho4.mat()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("linear inversion reproduces the Stokes formula") {
  const auto mub6 = mub6_measurements();
  Rng rng(77);
  for (int k = 0; k < 30; ++k) {
    const DensityMatrix rho = random_state(PriorKind::bures_uniform, 2, rng);
    const auto counts = sampled_counts(rho, mub6, 100, rng);
    const LinearInversionResult res = linear_inversion(counts, mub6);
    const RealVector s = state_coordinates(res.rho_hat);
    for (int axis = 0; axis < 3; ++axis) {
      const auto& c = counts[static_cast<size_t>(axis)].counts();
      const double stokes = static_cast<double>(c[0] - c[1]) /
                            static_cast<double>(c[0] + c[1]);
      CHECK(s(axis) == doctest::Approx(stokes).epsilon(1e-10));
    }
  }
}

TEST_CASE("linear inversion flags unphysical estimates for pure states") {
  const auto mub6 = mub6_measurements();
  Rng rng(1234);
  int unphysical = 0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    const DensityMatrix truth = random_state(PriorKind::haar_pure, 2, rng);
    const auto counts = sampled_counts(truth, mub6, 50, rng);
    if (!linear_inversion(counts, mub6).physical) ++unphysical;
  }
  const double fraction = static_cast<double>(unphysical) / trials;
  CHECK(fraction > 0.5);
  CHECK(fraction < 0.95);
}

TEST_CASE("linear inversion rejects incomplete designs") {
  const auto mub6 = mub6_measurements();
  std::vector<Povm> partial{mub6[0], mub6[1]};  // x and y only
  std::vector<CountVector> counts;
  counts.emplace_back(0, std::vector<long>{40, 60});
  counts.emplace_back(1, std::vector<long>{50, 50});
  CHECK_THROWS_AS((void)linear_inversion(counts, partial),
                  IncompleteDesignError);
}

TEST_CASE("log likelihood values") {
  const auto mub6 = mub6_measurements();
  // Single shot with outcome probability 1.
  {
    std::vector<CountVector> counts;
    counts.emplace_back(2, std::vector<long>{1, 0});
    CHECK(log_likelihood(basis_state(2, 0).projector(), counts, mub6) ==
          doctest::Approx(0.0));
    // Observing |1> under |0><0| is impossible.
    std::vector<CountVector> impossible;
    impossible.emplace_back(2, std::vector<long>{0, 1});
    CHECK(std::isinf(
        log_likelihood(basis_state(2, 0).projector(), impossible, mub6)));
  }
  // Counts (3, 1) on probabilities (1/2, 1/2).
  {
    std::vector<CountVector> counts;
    counts.emplace_back(0, std::vector<long>{3, 1});
    CHECK(log_likelihood(basis_state(2, 0).projector(), counts, mub6) ==
          doctest::Approx(4.0 * std::log(0.5)).epsilon(1e-12));
  }
}

TEST_CASE("MLE matches physical linear inversion on interior data") {
  Rng rng(9);
  const auto mub6 = mub6_measurements();
  const DensityMatrix truth = qubit_from_bloch(0.3, -0.1, 0.25);
  const auto counts = sampled_counts(truth, mub6, 20000, rng);
  const LinearInversionResult lin = linear_inversion(counts, mub6);
  REQUIRE(lin.physical);
  const DensityMatrix mle = mle_estimate(counts, mub6);
  CHECK(hs_distance(DensityMatrix::validated(lin.rho_hat), mle) < 1e-3);
}

TEST_CASE("MLE is rank deficient for pure-state data, hedging repairs it") {
  Rng rng(41);
  const auto mub6 = mub6_measurements();
  // Find a dataset whose linear inversion is unphysical.
  for (int attempt = 0; attempt < 20; ++attempt) {
    const DensityMatrix truth = random_state(PriorKind::haar_pure, 2, rng);
    const auto counts = sampled_counts(truth, mub6, 50, rng);
    if (linear_inversion(counts, mub6).physical) continue;

    const DensityMatrix mle = mle_estimate(counts, mub6);
    const double lam_min = hermitian_eigenvalues(mle.mat()).minCoeff();
    CHECK(lam_min < 1e-6);

    // Likelihood at the MLE dominates the truth.
    CHECK(log_likelihood(mle, counts, mub6) >=
          log_likelihood(truth, counts, mub6) - 1e-9);

    MleOptions hedged;
    hedged.hedging_beta = 0.5;
    const DensityMatrix h = mle_estimate(counts, mub6, hedged);
    const double lam_hedged = hermitian_eigenvalues(h.mat()).minCoeff();
    CHECK(lam_hedged > 0.0);

    // The minimum eigenvalue grows with beta on fixed data.
    MleOptions harder;
    harder.hedging_beta = 1.0;
    const DensityMatrix h2 = mle_estimate(counts, mub6, harder);
    CHECK(hermitian_eigenvalues(h2.mat()).minCoeff() > lam_hedged);
    return;
  }
  FAIL("no unphysical dataset found");
}

TEST_CASE("MLE likelihood dominates the truth on random datasets") {
  Rng rng(23);
  const auto mub6 = mub6_measurements();
  const auto tetra = std::vector<Povm>{tetrahedron_povm()};
  for (int k = 0; k < 10; ++k) {
    const DensityMatrix truth = random_state(PriorKind::bures_uniform, 2, rng);
    const auto& ms = k % 2 == 0 ? mub6 : tetra;
    const auto counts = sampled_counts(truth, ms, 200, rng);
    const DensityMatrix mle = mle_estimate(counts, ms);
    CHECK(log_likelihood(mle, counts, ms) >=
          log_likelihood(truth, counts, ms) - 1e-9);
  }
}

TEST_CASE("smc init") {
  const ParticleSet ps = smc_init({PriorKind::bures_uniform, 2}, 200, 7);
  CHECK(ps.size() == 200);
  for (int s = 0; s < ps.size(); ++s)
    CHECK(ps.weights()(s) == doctest::Approx(1.0 / 200).epsilon(1e-12));
  CHECK(effective_sample_size(ps) == doctest::Approx(200.0));

  // Deterministic under a fixed seed.
  const ParticleSet ps2 = smc_init({PriorKind::bures_uniform, 2}, 200, 7);
  CHECK((ps.coords() - ps2.coords()).cwiseAbs().maxCoeff() == 0.0);

  // Fresh Bures BME is close to I/2 (4 sigma of the component spread).
  const RealVector mean = ps.mean_coords();
  const double sigma = std::sqrt(0.7 / 3.0 / 200.0);  // E[s^2] ~ 0.7
  for (int i = 0; i < 3; ++i) CHECK(std::abs(mean(i)) < 4.0 * sigma);

  CHECK_THROWS_AS((void)smc_init({PriorKind::bures_uniform, 2}, 1, 7),
                  DomainError);
}

TEST_CASE("smc update follows Bayes rule by hand") {
  const auto mub6 = mub6_measurements();
  auto z_povm = std::make_shared<const Povm>(mub6[2]);

  std::vector<DensityMatrix> particles{basis_state(2, 0).projector(),
                                       basis_state(2, 1).projector()};
  RealVector weights(2);
  weights << 0.5, 0.5;
  SmcPolicy policy;
  policy.ess_fraction = 0.0;  // keep resampling out of this test
  ParticleSet ps = particle_set_from_snapshot(particles, weights,
                                              {PriorKind::bures_uniform, 2},
                                              policy, 3);

  ParticleSet updated = smc_update(ps, {z_povm, 0});
  CHECK(updated.weights()(0) == doctest::Approx(1.0));
  CHECK(updated.weights()(1) == doctest::Approx(0.0));
  CHECK(updated.history_length() == 1);

  // An uninformative measurement leaves weights unchanged.
  auto x_povm = std::make_shared<const Povm>(mub6[0]);
  ParticleSet after_x = smc_update(ps, {x_povm, 0});
  CHECK(after_x.weights()(0) == doctest::Approx(0.5));
  CHECK(after_x.weights()(1) == doctest::Approx(0.5));

  // Impossible outcome: every particle assigns zero probability.
  ParticleSet degenerate = smc_update(ps, {z_povm, 0});
  CHECK_THROWS_AS((void)smc_update(degenerate, {z_povm, 1}),
                  DegeneratePosteriorError);
}

TEST_CASE("sequential updates equal the batch posterior (brute force)") {
  // 10 particles, 20 shots, across every measurement family.
  Rng rng(600);
  for (int dim : {2, 4}) {
    std::vector<Povm> pool;
    if (dim == 2) {
      for (const auto& m : mub6_measurements()) pool.push_back(m);
      pool.push_back(tetrahedron_povm());
      for (const auto& m : platonic_measurements(PlatonicSolid::icosahedron))
        pool.push_back(m);
      pool.push_back(haar_random_projector(2, rng));
    } else {
      for (const auto& m : pauli_product_measurements()) pool.push_back(m);
      pool.push_back(haar_random_projector(4, rng));
      Rng qubit_rng(4);
      pool.push_back(factorized_projector(
          PureState::normalized(ginibre(2, 1, qubit_rng).col(0)),
          PureState::normalized(ginibre(2, 1, qubit_rng).col(0))));
    }

    std::vector<DensityMatrix> particles;
    for (int s = 0; s < 10; ++s)
      particles.push_back(random_state(PriorKind::bures_uniform, dim, rng));
    RealVector weights = RealVector::Constant(10, 0.1);
    SmcPolicy policy;
    policy.ess_fraction = 0.0;  // no resampling: exact weight algebra
    ParticleSet ps = particle_set_from_snapshot(
        particles, weights, {PriorKind::bures_uniform, dim}, policy, 5);

    const DensityMatrix truth = random_state(PriorKind::bures_uniform, dim,
                                             rng);
    RealVector log_batch = RealVector::Zero(10);
    for (int shot = 0; shot < 20; ++shot) {
      const Povm& m = pool[rng.uniform_index(pool.size())];
      auto povm = std::make_shared<const Povm>(m);
      const int outcome = sample_outcome(truth, m, rng);
      ps = smc_update(std::move(ps), {povm, outcome});
      for (int s = 0; s < 10; ++s)
        log_batch(s) += std::log(std::max(
            born_probabilities(particles[static_cast<size_t>(s)], m)(outcome),
            1e-300));
    }
    RealVector batch = (log_batch.array() - log_batch.maxCoeff()).exp();
    batch /= batch.sum();
    for (int s = 0; s < 10; ++s)
      CHECK(std::abs(ps.weights()(s) - batch(s)) < 1e-10);
  }
}

TEST_CASE("effective sample size") {
  std::vector<DensityMatrix> particles{basis_state(2, 0).projector(),
                                       basis_state(2, 1).projector()};
  RealVector w(2);
  w << 0.75, 0.25;
  ParticleSet ps = particle_set_from_snapshot(
      particles, w, {PriorKind::bures_uniform, 2}, SmcPolicy{}, 1);
  CHECK(effective_sample_size(ps) == doctest::Approx(1.6).epsilon(1e-12));

  RealVector collapsed(2);
  collapsed << 1.0, 0.0;
  ParticleSet ps2 = particle_set_from_snapshot(
      particles, collapsed, {PriorKind::bures_uniform, 2}, SmcPolicy{}, 1);
  CHECK(effective_sample_size(ps2) == doctest::Approx(1.0));
}

TEST_CASE("liu-west resampling preserves the posterior mean") {
  Rng rng(17);
  const auto mub6 = mub6_measurements();
  const DensityMatrix truth = qubit_from_bloch(0.4, 0.2, -0.5);

  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    SmcPolicy policy;
    policy.ess_fraction = 0.0;
    ParticleSet ps = smc_init({PriorKind::bures_uniform, 2}, 400,
                              1000 + static_cast<std::uint64_t>(rep), policy);
    for (int shot = 0; shot < 30; ++shot) {
      const Povm& m = mub6[static_cast<size_t>(shot % 3)];
      auto povm = std::make_shared<const Povm>(m);
      ps = smc_update(std::move(ps), {povm, sample_outcome(truth, m, rng)});
    }
    const DensityMatrix before = bme(ps);
    ParticleSet resampled = resample(ps, ResampleMethod::liu_west);
    for (int s = 0; s < resampled.size(); ++s) {
      CHECK(resampled.weights()(s) ==
            doctest::Approx(1.0 / resampled.size()).epsilon(1e-12));
    }
    // Every particle stays physical (projection guarantee).
    for (int s = 0; s < resampled.size(); ++s)
      CHECK(hermitian_eigenvalues(resampled.particle(s).mat()).minCoeff() >=
            -1e-10);
    worst = std::max(worst, hs_distance(before, bme(resampled)));
  }
  CHECK(worst < 5.0 / std::sqrt(400.0));
}

TEST_CASE("metropolis-hastings resampling targets the posterior") {
  Rng rng(19);
  const auto mub6 = mub6_measurements();
  const DensityMatrix truth = qubit_from_bloch(0.0, 0.0, 0.6);

  SmcPolicy policy;
  policy.ess_fraction = 0.0;
  policy.method = ResampleMethod::metropolis_hastings;
  ParticleSet ps = smc_init({PriorKind::bures_uniform, 2}, 300, 11, policy);
  REQUIRE(ps.has_latents());
  for (int shot = 0; shot < 60; ++shot) {
    const Povm& m = mub6[static_cast<size_t>(shot % 3)];
    auto povm = std::make_shared<const Povm>(m);
    ps = smc_update(std::move(ps), {povm, sample_outcome(truth, m, rng)});
  }
  const DensityMatrix before = bme(ps);
  ResampleParams params;
  params.mh_steps = 40;
  params.mh_step_scale = 0.3;
  ParticleSet resampled = resample(ps, ResampleMethod::metropolis_hastings,
                                   params);
  CHECK(resampled.weights().maxCoeff() ==
        doctest::Approx(1.0 / resampled.size()));
  CHECK(hs_distance(before, bme(resampled)) < 0.02);
  CHECK(resampled.has_latents());

  // Liu-West drops latent coordinates; MH then refuses to run.
  ParticleSet lw = resample(ps, ResampleMethod::liu_west);
  CHECK(!lw.has_latents());
  CHECK_THROWS_AS(
      (void)resample(lw, ResampleMethod::metropolis_hastings, params),
      std::logic_error);
}

TEST_CASE("bme equals the weighted elementwise mean") {
  Rng rng(43);
  std::vector<DensityMatrix> particles;
  for (int s = 0; s < 20; ++s)
    particles.push_back(random_state(PriorKind::hs_uniform, 2, rng));
  RealVector w(20);
  for (int s = 0; s < 20; ++s) w(s) = rng.uniform();
  w /= w.sum();
  ParticleSet ps = particle_set_from_snapshot(
      particles, w, {PriorKind::hs_uniform, 2}, SmcPolicy{}, 2);

  Matrix direct = Matrix::Zero(2, 2);
  for (int s = 0; s < 20; ++s) direct += w(s) * particles[static_cast<size_t>(s)].mat();
  CHECK((bme(ps).mat() - direct).cwiseAbs().maxCoeff() < 1e-12);

  // Single dominant weight returns that particle; orthogonal pure pair
  // averages to I/2.
  RealVector spike = RealVector::Zero(20);
  spike(3) = 1.0;
  ParticleSet ps_spike = particle_set_from_snapshot(
      particles, spike, {PriorKind::hs_uniform, 2}, SmcPolicy{}, 2);
  CHECK((bme(ps_spike).mat() - particles[3].mat()).cwiseAbs().maxCoeff() <
        1e-12);

  std::vector<DensityMatrix> pair{basis_state(2, 0).projector(),
                                  basis_state(2, 1).projector()};
  RealVector half(2);
  half << 0.5, 0.5;
  ParticleSet ps_pair = particle_set_from_snapshot(
      pair, half, {PriorKind::hs_uniform, 2}, SmcPolicy{}, 2);
  CHECK((bme(ps_pair).mat() - Matrix::Identity(2, 2) / 2.0)
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("credible regions") {
  Rng rng(3);
  const auto mub6 = mub6_measurements();
  const DensityMatrix truth = qubit_from_bloch(0.2, -0.3, 0.4);
  ParticleSet ps = smc_init({PriorKind::bures_uniform, 2}, 500, 21);
  for (int shot = 0; shot < 100; ++shot) {
    const Povm& m = mub6[static_cast<size_t>(shot % 3)];
    auto povm = std::make_shared<const Povm>(m);
    ps = smc_update(std::move(ps), {povm, sample_outcome(truth, m, rng)});
  }

  const CredibleEllipsoid region = credible_region(ps, 0.05);
  CHECK(region.mass >= 0.95);
  CHECK(!region.degenerate);
  // The shape matrix is symmetric PSD.
  CHECK((region.shape - region.shape.transpose()).cwiseAbs().maxCoeff() <
        1e-10);
  CHECK(Eigen::SelfAdjointEigenSolver<RealMatrix>(region.shape)
            .eigenvalues()
            .minCoeff() >= -1e-10);

  // Every selected particle is enclosed (the heaviest ones certainly are).
  Ellipsoid as_ellipsoid{region.center, region.shape, false};
  int enclosed = 0, heavy = 0;
  for (int s = 0; s < ps.size(); ++s) {
    if (ps.weights()(s) < 1.2 / ps.size()) continue;
    ++heavy;
    if (ellipsoid_membership(as_ellipsoid, ps.coords().row(s).transpose()) <=
        1.0 + 1e-3)
      ++enclosed;
  }
  CHECK(heavy > 0);
  CHECK(enclosed == heavy);

  // alpha -> 1 selects the single heaviest particle: a degenerate point.
  const CredibleEllipsoid point = credible_region(ps, 0.999999);
  CHECK(point.degenerate);
  Eigen::Index heaviest;
  ps.weights().maxCoeff(&heaviest);
  CHECK((point.center - ps.coords().row(heaviest).transpose()).norm() <
        1e-12);

  // Volume shrinks with more data on a fixed trajectory.
  double early_log_volume = 0.0;
  {
    Ellipsoid e{region.center, region.shape, false};
    early_log_volume = ellipsoid_log_volume(e);
  }
  for (int shot = 0; shot < 1900; ++shot) {
    const Povm& m = mub6[static_cast<size_t>(shot % 3)];
    auto povm = std::make_shared<const Povm>(m);
    ps = smc_update(std::move(ps), {povm, sample_outcome(truth, m, rng)});
  }
  const CredibleEllipsoid later = credible_region(ps, 0.05);
  Ellipsoid late{later.center, later.shape, false};
  CHECK(ellipsoid_log_volume(late) < early_log_volume);
}

TEST_CASE("fisher information and the Cramer-Rao floor") {
  const auto mub6 = mub6_measurements();
  const DensityMatrix mixed =
      DensityMatrix::trusted(Matrix::Identity(2, 2) / 2.0);

  const RealMatrix info = fisher_information(mixed, mub6);
  CHECK((info - info.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(Eigen::SelfAdjointEigenSolver<RealMatrix>(info)
            .eigenvalues()
            .minCoeff() > 0.0);

  // Exact floor 3/(2N) per axis at the maximally mixed state.
  const long n = 1200;
  const RealVector floor_vec = cramer_rao_floor(mixed, mub6, n);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(floor_vec(i) - 1.5 / static_cast<double>(n)) < 1e-9);

  // General diagonal law (3/(2N))(1 - s_i^2) for an axis-aligned state.
  const DensityMatrix tilted = qubit_from_bloch(0.3, 0.0, 0.5);
  const RealVector tilted_floor = cramer_rao_floor(tilted, mub6, n);
  CHECK(tilted_floor(0) ==
        doctest::Approx(1.5 * (1 - 0.09) / n).epsilon(1e-9));
  CHECK(tilted_floor(2) ==
        doctest::Approx(1.5 * (1 - 0.25) / n).epsilon(1e-9));

  // Finite-difference check of the probability derivatives feeding I_F.
  const double h = 1e-6;
  for (const Povm& m : mub6)
    for (int k = 0; k < 2; ++k) {
      const RealVector coords = m.coords(k);
      for (int j = 0; j < 3; ++j) {
        BlochVector plus{0.1, -0.05, 0.2}, minus = plus;
        (&plus.s1)[j] += h;
        (&minus.s1)[j] -= h;
        const double num =
            (born_probabilities(density_from_bloch(plus), m)(k) -
             born_probabilities(density_from_bloch(minus), m)(k)) /
            (2.0 * h);
        CHECK(std::abs(num - coords(j)) < 1e-6);
      }
    }

  // Boundary states are rejected; singular designs error out.
  CHECK_THROWS_AS(
      (void)fisher_information(basis_state(2, 0).projector(), mub6),
      DomainError);
  std::vector<Povm> only_z{mub6[2]};
  CHECK_THROWS_AS((void)cramer_rao_floor(mixed, only_z, 100), DomainError);
}

TEST_CASE("posterior consistency: error shrinks with data") {
  Rng rng(2024);
  const auto mub6 = mub6_measurements();
  const DensityMatrix truth = qubit_from_bloch(0.25, 0.35, -0.2);
  std::vector<double> early, late;
  for (int run = 0; run < 50; ++run) {
    ParticleSet ps = smc_init({PriorKind::bures_uniform, 2}, 400,
                              9000 + static_cast<std::uint64_t>(run));
    for (int shot = 1; shot <= 4000; ++shot) {
      const Povm& m = mub6[static_cast<size_t>(shot % 3)];
      auto povm = std::make_shared<const Povm>(m);
      ps = smc_update(std::move(ps), {povm, sample_outcome(truth, m, rng)});
      if (shot == 250) early.push_back(bures_distance(truth, bme(ps)));
    }
    late.push_back(bures_distance(truth, bme(ps)));
  }
  std::sort(early.begin(), early.end());
  std::sort(late.begin(), late.end());
  CHECK(late[25] < early[25]);
}

TEST_CASE("posterior size proxy tracks the true error") {
  // Median over an ensemble of mean posterior d_B^2 to the BME vs the true
  // d_B^2(truth, BME), within a factor of 3.
  Rng rng(55);
  const auto mub6 = mub6_measurements();
  std::vector<double> ratios;
  for (int run = 0; run < 40; ++run) {
    const DensityMatrix truth =
        random_state(PriorKind::bures_uniform, 2, rng);
    ParticleSet ps = smc_init({PriorKind::bures_uniform, 2}, 500,
                              777 + static_cast<std::uint64_t>(run));
    for (int shot = 1; shot <= 1000; ++shot) {
      const Povm& m = mub6[static_cast<size_t>(shot % 3)];
      auto povm = std::make_shared<const Povm>(m);
      ps = smc_update(std::move(ps), {povm, sample_outcome(truth, m, rng)});
    }
    const DensityMatrix estimate = bme(ps);
    double proxy = 0.0;
    for (int s = 0; s < ps.size(); ++s) {
      const double d = bures_distance(ps.particle(s), estimate);
      proxy += ps.weights()(s) * d * d;
    }
    const double actual = std::pow(bures_distance(truth, estimate), 2);
    if (actual > 0.0) ratios.push_back(proxy / actual);
  }
  std::sort(ratios.begin(), ratios.end());
  const double median = ratios[ratios.size() / 2];
  CHECK(median > 1.0 / 3.0);
  CHECK(median < 3.0);
}

TEST_CASE("particle snapshot round trip and validation") {
  Rng rng(91);
  ParticleSet ps = smc_init({PriorKind::bures_uniform, 4}, 50, 31);
  std::stringstream buffer;
  {
    std::vector<DensityMatrix> states;
    for (int s = 0; s < ps.size(); ++s) states.push_back(ps.particle(s));
    save_particles(buffer, states, ps.weights());
  }
  const ParticleSnapshot snap = load_particles(buffer);
  REQUIRE(snap.states.size() == 50);
  for (int s = 0; s < 50; ++s)
    CHECK((snap.states[static_cast<size_t>(s)].mat() - ps.particle(s).mat())
              .cwiseAbs()
              .maxCoeff() < 1e-15);
  CHECK(snap.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));

  // Broken inputs are rejected.
  std::stringstream bad("0.5 1 0 0 0 0 0 0 0\n");  // weights sum to 0.5
  CHECK_THROWS_AS((void)load_particles(bad), DomainError);
  std::stringstream unphysical("1 1.2 0 0 0 0 0 -0.2 0\n");
  CHECK_THROWS_AS((void)load_particles(unphysical), DomainError);
  std::stringstream garbage("1 x y\n");
  CHECK_THROWS_AS((void)load_particles(garbage), DomainError);
}
