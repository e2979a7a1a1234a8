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

#include "core/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "core/estimators.hpp"

namespace qtomo {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  if (n == 0) return 0.0;
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Outcome tallies per measurement setting, keyed by the POVM label (the
/// static and two-step policies reuse labeled settings).
class CountRegistry {
 public:
  void add(const MeasurementRecord& record) {
    auto it = index_.find(record.povm->label());
    if (it == index_.end()) {
      index_.emplace(record.povm->label(), povms_.size());
      povms_.push_back(*record.povm);
      tallies_.emplace_back(povms_.back().n_outcomes(), 0L);
      it = index_.find(record.povm->label());
    }
    ++tallies_[it->second][static_cast<size_t>(record.outcome)];
  }

  std::vector<CountVector> counts() const {
    std::vector<CountVector> out;
    for (size_t k = 0; k < povms_.size(); ++k) {
      long total = 0;
      for (long c : tallies_[k]) total += c;
      if (total > 0) out.emplace_back(static_cast<int>(k), tallies_[k]);
    }
    return out;
  }

  const std::vector<Povm>& measurements() const { return povms_; }

 private:
  std::map<std::string, size_t> index_;
  std::vector<Povm> povms_;
  std::vector<std::vector<long>> tallies_;
};

/// True for two-outcome measurements whose first effect is a rank-1
/// projector (the shape the jitter hook perturbs).
bool is_projector_measurement(const Povm& m) {
  if (m.n_outcomes() != 2) return false;
  const double tr = m.effect(0).trace().real();
  const double tr2 = (m.effect(0) * m.effect(0)).trace().real();
  return std::abs(tr - 1.0) < 1e-9 && std::abs(tr2 - 1.0) < 1e-9;
}

/// Instrument-noise hook: Gaussian perturbation of the projector state
/// vector (an angle jitter of order sigma for small sigma).
Povm jittered_projector(const Povm& m, double sigma, Rng& rng) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.effect(0));
  Eigen::Index top;
  es.eigenvalues().maxCoeff(&top);
  Vector psi = es.eigenvectors().col(top);
  for (Eigen::Index i = 0; i < psi.size(); ++i)
    psi(i) += sigma * Complex(rng.gaussian(), rng.gaussian());
  return projector_measurement(PureState::normalized(psi));
}

CheckpointMetrics make_metrics(long n, const DensityMatrix& truth,
                               const DensityMatrix& estimate,
                               const ParticleSet* ps, double seconds) {
  CheckpointMetrics mets;
  mets.n = n;
  mets.infidelity = 1.0 - fidelity(truth, estimate);
  const double db = bures_distance(truth, estimate);
  mets.bures_sq = db * db;
  mets.trace_dist = trace_distance(truth, estimate);
  mets.hs_dist = hs_distance(truth, estimate);
  if (ps != nullptr) {
    double size = 0.0;
    for (int s = 0; s < ps->size(); ++s) {
      const double d = bures_distance(ps->particle(s), estimate);
      size += ps->weights()(s) * d * d;
    }
    mets.posterior_size = size;
  } else {
    mets.posterior_size = std::numeric_limits<double>::quiet_NaN();
  }
  mets.seconds = seconds;
  return mets;
}

DensityMatrix truth_for_replica(const ExperimentConfig& cfg, Rng& rng) {
  if (cfg.truth.kind == TruthSource::Kind::fixed) return *cfg.truth.fixed;
  return sample_prior(cfg.truth.prior, rng);
}

TrialResult run_self_guided_trial(const ExperimentConfig& cfg, int replica,
                                  const DensityMatrix& truth, Rng& sim_rng) {
  const auto t0 = Clock::now();
  TrialResult result;
  result.replica = replica;
  SelfGuidedState state = self_guided_init(cfg.dim, sim_rng);
  const InfidelityOracle oracle = sampled_infidelity_oracle(truth);
  const long shots_per_iteration = 2L * cfg.strategy.shots_per_eval;
  long shots = 0;
  size_t ck = 0;
  while (ck < cfg.checkpoints.size() && shots < cfg.n_max) {
    state = self_guided_step(state, cfg.strategy.shots_per_eval, oracle,
                             sim_rng);
    shots += shots_per_iteration;
    // Checkpoints between iteration boundaries are evaluated at the first
    // boundary past them (at most 2*shots_per_eval - 1 extra shots).
    while (ck < cfg.checkpoints.size() && cfg.checkpoints[ck] <= shots) {
      result.checkpoints.push_back(make_metrics(cfg.checkpoints[ck], truth,
                                                state.psi.projector(), nullptr,
                                                seconds_since(t0)));
      ++ck;
    }
  }
  while (ck < cfg.checkpoints.size()) {
    result.checkpoints.push_back(make_metrics(cfg.checkpoints[ck], truth,
                                              state.psi.projector(), nullptr,
                                              seconds_since(t0)));
    ++ck;
  }
  return result;
}

}  // namespace

const char* estimator_kind_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::smc_bme: return "smc_bme";
    case EstimatorKind::mle: return "mle";
    case EstimatorKind::linear: return "linear";
    case EstimatorKind::self_guided: return "self_guided";
  }
  return "?";
}

std::optional<EstimatorKind> estimator_kind_from_name(
    const std::string& name) {
  for (EstimatorKind kind : {EstimatorKind::smc_bme, EstimatorKind::mle,
                             EstimatorKind::linear, EstimatorKind::self_guided})
    if (name == estimator_kind_name(kind)) return kind;
  return std::nullopt;
}

int default_particle_count(int dim) { return dim == 2 ? 1000 : 4000; }

std::vector<long> log_spaced_checkpoints(long n_max, int count) {
  if (n_max < 1) throw ConfigurationError("n_max must be positive");
  if (count < 1) throw ConfigurationError("checkpoint count must be >= 1");
  const double lo = std::log10(std::min<double>(10.0, n_max));
  const double hi = std::log10(static_cast<double>(n_max));
  std::vector<long> out;
  for (int k = 0; k < count; ++k) {
    const double t = count == 1 ? 1.0 : static_cast<double>(k) / (count - 1);
    const long n = std::llround(std::pow(10.0, lo + t * (hi - lo)));
    if (out.empty() || n > out.back()) out.push_back(std::min(n, n_max));
  }
  if (out.back() != n_max) out.push_back(n_max);
  return out;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.dim != 2 && cfg.dim != 4)
    throw ConfigurationError("dim must be 2 or 4");
  if (cfg.n_max < 1) throw ConfigurationError("n_max must be >= 1");
  if (cfg.replicas < 1) throw ConfigurationError("replicas must be >= 1");
  if (cfg.workers < 1) throw ConfigurationError("workers must be >= 1");
  if (cfg.checkpoints.empty())
    throw ConfigurationError("no checkpoints inside [1, n_max]");
  long prev = 0;
  for (long n : cfg.checkpoints) {
    if (n <= prev) throw ConfigurationError("checkpoints must be increasing");
    if (n > cfg.n_max)
      throw ConfigurationError("checkpoint exceeds n_max");
    prev = n;
  }
  if (cfg.truth.kind == TruthSource::Kind::fixed) {
    if (!cfg.truth.fixed)
      throw ConfigurationError("fixed truth source has no state");
    if (cfg.truth.fixed->dim() != cfg.dim)
      throw ConfigurationError("fixed truth dimension differs from dim");
  } else if (cfg.truth.prior.dim != cfg.dim) {
    throw ConfigurationError("truth prior dimension differs from dim");
  }
  if (cfg.smc_prior.dim != cfg.dim)
    throw ConfigurationError("particle prior dimension differs from dim");
  validate_strategy_spec(cfg.strategy, cfg.dim);
  const bool self_guided = cfg.strategy.kind == StrategyKind::self_guided;
  if (self_guided != (cfg.estimator == EstimatorKind::self_guided))
    throw ConfigurationError(
        "self_guided strategy and estimator imply each other");
  if (!self_guided &&
      (cfg.estimator == EstimatorKind::linear ||
       cfg.estimator == EstimatorKind::mle)) {
    switch (cfg.strategy.kind) {
      case StrategyKind::static_cycle:
      case StrategyKind::two_step:
      case StrategyKind::two_step_guo:
        break;
      default:
        throw ConfigurationError(
            "linear/mle estimators need a fixed measurement schedule");
    }
  }
  if (cfg.n_particles < 0 || cfg.n_particles == 1)
    throw ConfigurationError("particle count must be 0 (default) or >= 2");
  if (cfg.smc_policy.ess_fraction <= 0.0 || cfg.smc_policy.ess_fraction > 1.0)
    throw ConfigurationError("ess_threshold must lie in (0, 1]");
  if (cfg.smc_policy.params.liu_west_a <= 0.0 ||
      cfg.smc_policy.params.liu_west_a >= 1.0)
    throw ConfigurationError("liu_west_a must lie in (0, 1)");
  if (cfg.jitter_sigma < 0.0)
    throw ConfigurationError("jitter_sigma must be >= 0");
}

TrialResult run_trial(const ExperimentConfig& cfg, int replica_index) {
  validate_config(cfg);
  Rng truth_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(replica_index), 0));
  Rng sim_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(replica_index), 1));
  const std::uint64_t ps_seed =
      derive_seed(cfg.seed, static_cast<std::uint64_t>(replica_index), 2);

  const DensityMatrix truth = truth_for_replica(cfg, truth_rng);
  if (cfg.strategy.kind == StrategyKind::self_guided)
    return run_self_guided_trial(cfg, replica_index, truth, sim_rng);

  auto strategy = Strategy::create(cfg.strategy, cfg.dim, cfg.n_max);
  const bool want_smc =
      cfg.estimator == EstimatorKind::smc_bme || strategy->needs_posterior();
  std::optional<ParticleSet> ps;
  if (want_smc) {
    const int n_particles = cfg.n_particles > 0
                                ? cfg.n_particles
                                : default_particle_count(cfg.dim);
    ps = smc_init(cfg.smc_prior, n_particles, ps_seed, cfg.smc_policy);
  }
  const bool want_counts = cfg.estimator == EstimatorKind::linear ||
                           cfg.estimator == EstimatorKind::mle;
  CountRegistry registry;

  const auto t0 = Clock::now();
  TrialResult result;
  result.replica = replica_index;
  size_t ck = 0;
  try {
    for (long shot = 1; shot <= cfg.n_max; ++shot) {
      Povm chosen = strategy->choose_next(ps ? &*ps : nullptr, sim_rng);
      auto povm = std::make_shared<const Povm>(std::move(chosen));
      int outcome;
      if (cfg.jitter_sigma > 0.0 && is_projector_measurement(*povm)) {
        const Povm actual =
            jittered_projector(*povm, cfg.jitter_sigma, sim_rng);
        outcome = sample_outcome(truth, actual, sim_rng);
      } else {
        outcome = sample_outcome(truth, *povm, sim_rng);
      }
      const MeasurementRecord record{povm, outcome};
      strategy->observe(record);
      if (ps) ps = smc_update(std::move(*ps), record);
      if (want_counts) registry.add(record);

      if (ck < cfg.checkpoints.size() && shot == cfg.checkpoints[ck]) {
        DensityMatrix estimate = DensityMatrix::trusted(
            Matrix::Identity(cfg.dim, cfg.dim) / cfg.dim);
        const ParticleSet* posterior = nullptr;
        switch (cfg.estimator) {
          case EstimatorKind::smc_bme:
            estimate = bme(*ps);
            posterior = &*ps;
            break;
          case EstimatorKind::linear:
            estimate = project_to_physical(
                linear_inversion(registry.counts(), registry.measurements())
                    .rho_hat);
            break;
          case EstimatorKind::mle:
            estimate =
                mle_estimate(registry.counts(), registry.measurements());
            break;
          case EstimatorKind::self_guided:
            break;  // unreachable
        }
        result.checkpoints.push_back(make_metrics(
            shot, truth, estimate, posterior, seconds_since(t0)));
        ++ck;
      }
    }
  } catch (const std::exception& err) {
    std::ostringstream msg;
    msg << "replica " << replica_index << " after "
        << (result.checkpoints.empty() ? 0 : result.checkpoints.back().n)
        << " recorded checkpoints: " << err.what();
    throw std::runtime_error(msg.str());
  }
  return result;
}

EnsembleResult run_ensemble(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const auto t0 = Clock::now();
  EnsembleResult result;
  result.trials.resize(static_cast<size_t>(cfg.replicas));

  const int workers = std::max(1, std::min(cfg.workers, cfg.replicas));
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::string first_error;
  auto work = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= cfg.replicas) return;
      try {
        result.trials[static_cast<size_t>(r)] = run_trial(cfg, r);
      } catch (const std::exception& err) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error.empty()) first_error = err.what();
        return;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (!first_error.empty()) throw std::runtime_error(first_error);

  const size_t n_checkpoints = result.trials[0].checkpoints.size();
  for (size_t c = 0; c < n_checkpoints; ++c) {
    EnsembleCurvePoint point;
    point.n = result.trials[0].checkpoints[c].n;
    std::vector<double> infid, bures;
    infid.reserve(result.trials.size());
    for (const TrialResult& t : result.trials) {
      infid.push_back(t.checkpoints[c].infidelity);
      bures.push_back(t.checkpoints[c].bures_sq);
    }
    const double n_d = static_cast<double>(infid.size());
    double mean = 0.0;
    for (double v : infid) mean += v;
    mean /= n_d;
    double var = 0.0;
    for (double v : infid) var += (v - mean) * (v - mean);
    var = infid.size() > 1 ? var / (n_d - 1.0) : 0.0;
    point.mean_infidelity = mean;
    point.se_infidelity = std::sqrt(var / n_d);
    point.median_infidelity = median_of(infid);
    double mean_b = 0.0;
    for (double v : bures) mean_b += v;
    point.mean_bures_sq = mean_b / n_d;
    point.median_bures_sq = median_of(bures);
    result.curve.push_back(point);
  }
  result.wall_seconds = seconds_since(t0);
  return result;
}

ScalingFit fit_scaling(const std::vector<std::pair<long, double>>& curve,
                       long n_lo, long n_hi) {
  if (n_lo >= n_hi) throw DomainError("fit window is empty");
  std::vector<double> xs, ys;
  for (const auto& [n, y] : curve) {
    if (n < n_lo || n > n_hi) continue;
    if (!(y > 0.0))
      throw DomainError("fit window contains a nonpositive value");
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(std::log(y));
  }
  if (xs.size() < 4)
    throw DomainError("fit window holds fewer than 4 points");
  const double n_d = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n_d * sxx - sx * sx;
  if (std::abs(denom) < 1e-12) throw DomainError("degenerate fit window");
  ScalingFit fit;
  fit.exponent = (n_d * sxy - sx * sy) / denom;
  const double intercept = (sy - fit.exponent * sx) / n_d;
  fit.prefactor = std::exp(intercept);
  fit.n_lo = n_lo;
  fit.n_hi = n_hi;
  fit.points = static_cast<int>(xs.size());
  double ss = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + fit.exponent * xs[i]);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n_d);
  return fit;
}

double gill_massar_infidelity(int dim, double n) {
  if (dim == 2) return 2.25 / n;
  if (dim == 4) return 18.75 / n;
  throw DimensionError("gill_massar_infidelity: dim must be 2 or 4");
}

double massar_popescu_infidelity(double n) { return 1.0 / (n + 2.0); }

double collective_mixed_infidelity(double n) {
  return (0.75 + 4.0 / (3.0 * M_PI)) / n;
}

BoundCurves bound_curves(int dim, const std::vector<long>& n_list) {
  if (dim != 2 && dim != 4)
    throw DimensionError("bound_curves: dim must be 2 or 4");
  BoundCurves out;
  out.n = n_list;
  for (long n : n_list) {
    const double nd = static_cast<double>(n);
    out.gill_massar.push_back(gill_massar_infidelity(dim, nd));
    if (dim == 2) {
      out.massar_popescu.push_back(massar_popescu_infidelity(nd));
      out.collective_mixed.push_back(collective_mixed_infidelity(nd));
    }
  }
  return out;
}

namespace {

std::string format_metric(double v) {
  if (std::isnan(v)) return "nan";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void write_trials_csv(std::ostream& os, const std::vector<TrialResult>& trials,
                      bool with_timing) {
  os << "replica,N,infidelity,bures_sq,trace_dist,hs_dist,posterior_size,"
        "seconds\n";
  for (const TrialResult& t : trials) {
    for (const CheckpointMetrics& m : t.checkpoints) {
      os << t.replica << ',' << m.n << ',' << format_metric(m.infidelity)
         << ',' << format_metric(m.bures_sq) << ','
         << format_metric(m.trace_dist) << ',' << format_metric(m.hs_dist)
         << ',' << format_metric(m.posterior_size) << ',';
      if (with_timing) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", m.seconds);
        os << buf;
      } else {
        os << '0';
      }
      os << '\n';
    }
  }
}

std::vector<TrialResult> read_trials_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw DomainError("CSV is empty");
  if (line.rfind("replica,N,infidelity", 0) != 0)
    throw DomainError("CSV header does not match the trial schema");
  std::map<int, TrialResult> by_replica;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    // Token-wise strtod parse; iostreams reject "nan" in the
    // posterior_size column.
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::vector<double> values;
    std::string token;
    bool ok = true;
    while (ss >> token) {
      char* end = nullptr;
      values.push_back(std::strtod(token.c_str(), &end));
      if (end == token.c_str() || *end != '\0') ok = false;
    }
    if (!ok || values.size() != 8)
      throw DomainError("CSV line " + std::to_string(line_no) +
                        " is malformed");
    CheckpointMetrics m;
    const int replica = static_cast<int>(values[0]);
    m.n = static_cast<long>(values[1]);
    m.infidelity = values[2];
    m.bures_sq = values[3];
    m.trace_dist = values[4];
    m.hs_dist = values[5];
    m.posterior_size = values[6];
    m.seconds = values[7];
    auto& trial = by_replica[replica];
    trial.replica = replica;
    trial.checkpoints.push_back(m);
  }
  if (by_replica.empty()) throw DomainError("CSV holds no data rows");
  std::vector<TrialResult> out;
  for (auto& [r, t] : by_replica) out.push_back(std::move(t));
  return out;
}

std::vector<std::pair<long, double>> mean_infidelity_curve(
    const std::vector<TrialResult>& trials) {
  std::map<long, std::pair<double, long>> acc;
  for (const TrialResult& t : trials)
    for (const CheckpointMetrics& m : t.checkpoints) {
      acc[m.n].first += m.infidelity;
      acc[m.n].second += 1;
    }
  std::vector<std::pair<long, double>> out;
  for (const auto& [n, sum_count] : acc)
    out.emplace_back(n, sum_count.first / static_cast<double>(sum_count.second));
  return out;
}

}  // namespace qtomo
