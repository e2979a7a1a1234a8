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

#include "core/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace qtomo {

namespace {

/// Multinomial ancestor selection: n draws from the categorical(weights).
std::vector<int> multinomial_select(const RealVector& weights, int n,
                                    Rng& rng) {
  RealVector cdf(weights.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    acc += weights(i);
    cdf(i) = acc;
  }
  std::vector<int> idx(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double u = rng.uniform() * acc;
    const double* begin = cdf.data();
    const double* pos = std::lower_bound(begin, begin + cdf.size(), u);
    idx[static_cast<size_t>(k)] =
        std::min(static_cast<int>(pos - begin),
                 static_cast<int>(cdf.size()) - 1);
  }
  return idx;
}

RealMatrix coords_of(const std::vector<DensityMatrix>& particles) {
  const int n = static_cast<int>(particles.size());
  const int d = particles[0].dim();
  RealMatrix x(n, d * d - 1);
  for (int s = 0; s < n; ++s)
    x.row(s) = state_coordinates(particles[static_cast<size_t>(s)].mat())
                   .transpose();
  return x;
}

}  // namespace

const RealMatrix& ParticleSet::coords() const { return cloud_->coords; }

const DensityMatrix& ParticleSet::particle(int s) const {
  return cloud_->particles[static_cast<size_t>(s)];
}

RealVector ParticleSet::mean_coords() const {
  return cloud_->coords.transpose() * weights_;
}

bool ParticleSet::has_latents() const { return !cloud_->latents.empty(); }

ParticleSet smc_init(const PriorSpec& prior, int n_particles,
                     std::uint64_t seed, const SmcPolicy& policy) {
  if (n_particles < 2)
    throw DomainError("particle filter needs at least 2 particles");
  ParticleSet ps;
  ps.prior_ = prior;
  ps.policy_ = policy;
  ps.rng_ = Rng(seed);

  auto cloud = std::make_shared<ParticleSet::Cloud>();
  cloud->particles.reserve(static_cast<size_t>(n_particles));
  const bool keep_latents =
      policy.method == ResampleMethod::metropolis_hastings;
  if (keep_latents) cloud->latents.reserve(static_cast<size_t>(n_particles));
  for (int s = 0; s < n_particles; ++s) {
    StateLatent latent = sample_latent(prior, ps.rng_);
    cloud->particles.push_back(state_from_latent(prior.kind, latent));
    if (keep_latents) cloud->latents.push_back(std::move(latent));
  }
  cloud->coords = coords_of(cloud->particles);
  ps.cloud_ = std::move(cloud);
  ps.weights_ =
      RealVector::Constant(n_particles, 1.0 / static_cast<double>(n_particles));
  return ps;
}

ParticleSet smc_update(ParticleSet ps, const MeasurementRecord& record) {
  if (!record.povm) throw DomainError("measurement record has no POVM");
  if (record.povm->dim() != ps.dim())
    throw DimensionError("record and particle dimensions do not match");
  if (record.outcome < 0 || record.outcome >= record.povm->n_outcomes())
    throw DomainError("outcome index out of range");

  const RealVector probs =
      (ps.cloud_->coords * record.povm->coords(record.outcome)).array() +
      record.povm->coord_offset(record.outcome);
  ps.weights_.array() *= probs.array().max(0.0);
  const double total = ps.weights_.sum();
  if (!(total > 0.0))
    throw DegeneratePosteriorError(
        "all posterior weights vanished on the observed outcome");
  ps.weights_ /= total;

  auto node = std::make_shared<ParticleSet::HistoryNode>();
  node->record = record;
  node->prev = std::move(ps.history_);
  ps.history_ = std::move(node);
  ++ps.history_length_;

  if (effective_sample_size(ps) <
      ps.policy_.ess_fraction * static_cast<double>(ps.size()))
    ps = resample(std::move(ps), ps.policy_.method, ps.policy_.params);
  return ps;
}

double effective_sample_size(const ParticleSet& ps) {
  return 1.0 / ps.weights().squaredNorm();
}

ParticleSet ParticleSet::liu_west_impl(ParticleSet ps,
                                       const ResampleParams& params) {
  const int n = ps.size();
  const int dim = ps.dim();
  const double a = params.liu_west_a;
  const RealMatrix& x = ps.coords();
  const RealVector& w = ps.weights();

  const RealVector mean = x.transpose() * w;
  RealMatrix centered = x.rowwise() - mean.transpose();
  RealMatrix cov = centered.transpose() * (w.asDiagonal() * centered);
  cov = 0.5 * (cov + cov.transpose());

  // Noise factor for covariance (1-a^2) Cov.
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(cov);
  const RealVector noise_scale =
      ((1.0 - a * a) * es.eigenvalues().cwiseMax(0.0)).cwiseSqrt();

  const std::vector<int> ancestors = multinomial_select(w, n, ps.rng_);

  auto cloud = std::make_shared<ParticleSet::Cloud>();
  cloud->particles.reserve(static_cast<size_t>(n));
  cloud->coords.resize(n, dim * dim - 1);
  RealVector z(noise_scale.size());
  for (int s = 0; s < n; ++s) {
    const RealVector& parent =
        x.row(ancestors[static_cast<size_t>(s)]).transpose();
    for (Eigen::Index i = 0; i < z.size(); ++i)
      z(i) = ps.rng_.gaussian() * noise_scale(i);
    const RealVector proposal =
        a * parent + (1.0 - a) * mean + es.eigenvectors() * z;
    DensityMatrix state =
        project_to_physical(matrix_from_coordinates(dim, proposal));
    cloud->coords.row(s) = state_coordinates(state.mat()).transpose();
    cloud->particles.push_back(std::move(state));
  }
  ps.cloud_ = std::move(cloud);
  ps.weights_ = RealVector::Constant(n, 1.0 / static_cast<double>(n));
  ++ps.resample_count_;
  return ps;
}

namespace {

struct HistoryDesign {
  RealMatrix coords;   // L x (d^2-1)
  RealVector offsets;  // L
};

HistoryDesign stack_history(const ParticleSet& ps) {
  const auto records = recorded_history(ps);
  HistoryDesign design;
  const int n_params = ps.dim() * ps.dim() - 1;
  design.coords.resize(static_cast<Eigen::Index>(records.size()), n_params);
  design.offsets.resize(static_cast<Eigen::Index>(records.size()));
  for (size_t j = 0; j < records.size(); ++j) {
    const auto& r = records[j];
    design.coords.row(static_cast<Eigen::Index>(j)) =
        r.povm->coords(r.outcome).transpose();
    design.offsets(static_cast<Eigen::Index>(j)) =
        r.povm->coord_offset(r.outcome);
  }
  return design;
}

double history_log_likelihood(const HistoryDesign& design,
                              const RealVector& coords) {
  if (design.offsets.size() == 0) return 0.0;
  const RealVector p = design.coords * coords + design.offsets;
  if ((p.array() <= 0.0).any())
    return -std::numeric_limits<double>::infinity();
  return p.array().log().sum();
}

/// log of the latent prior density up to a constant: Ginibre entries are
/// standard complex Gaussians, the Haar factor is flat under the
/// group-invariant proposal.
double latent_log_prior(const StateLatent& latent) {
  return -latent.g.squaredNorm();
}

StateLatent propose_latent(const StateLatent& latent, PriorKind kind,
                           double scale, Rng& rng) {
  StateLatent next;
  next.g = latent.g;
  const double s = scale / std::sqrt(2.0);
  for (Eigen::Index j = 0; j < next.g.cols(); ++j)
    for (Eigen::Index i = 0; i < next.g.rows(); ++i)
      next.g(i, j) += Complex(rng.gaussian() * s, rng.gaussian() * s);
  if (kind == PriorKind::bures_uniform) {
    // Left-multiply by exp(i scale H): a symmetric step w.r.t. Haar measure.
    const int d = static_cast<int>(latent.u.rows());
    Matrix h = ginibre(d, d, rng);
    h = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    Vector phases(d);
    for (int i = 0; i < d; ++i)
      phases(i) = std::exp(Complex(0.0, scale * es.eigenvalues()(i)));
    next.u = es.eigenvectors() * phases.asDiagonal() *
             es.eigenvectors().adjoint() * latent.u;
  } else {
    next.u = latent.u;
  }
  return next;
}

}  // namespace

ParticleSet ParticleSet::metropolis_impl(ParticleSet ps,
                                         const ResampleParams& params) {
  if (!ps.has_latents())
    throw std::logic_error(
        "metropolis_hastings resampling needs latent coordinates; initialize "
        "the set with a metropolis_hastings policy");
  const int n = ps.size();
  const int dim = ps.dim();
  const HistoryDesign design = stack_history(ps);
  const std::vector<int> ancestors = multinomial_select(ps.weights(), n,
                                                        ps.rng_);

  auto cloud = std::make_shared<ParticleSet::Cloud>();
  cloud->particles.reserve(static_cast<size_t>(n));
  cloud->latents.reserve(static_cast<size_t>(n));
  cloud->coords.resize(n, dim * dim - 1);

  const auto& old = *ps.cloud_;
  for (int s = 0; s < n; ++s) {
    const int anc = ancestors[static_cast<size_t>(s)];
    StateLatent latent = old.latents[static_cast<size_t>(anc)];
    DensityMatrix state = old.particles[static_cast<size_t>(anc)];
    RealVector coords = old.coords.row(anc).transpose();
    double log_post = latent_log_prior(latent) +
                      history_log_likelihood(design, coords);
    for (int step = 0; step < params.mh_steps; ++step) {
      StateLatent cand =
          propose_latent(latent, ps.prior_.kind, params.mh_step_scale,
                         ps.rng_);
      DensityMatrix cand_state = state_from_latent(ps.prior_.kind, cand);
      const RealVector cand_coords = state_coordinates(cand_state.mat());
      const double cand_log_post =
          latent_log_prior(cand) +
          history_log_likelihood(design, cand_coords);
      const double log_alpha = cand_log_post - log_post;
      if (log_alpha >= 0.0 || ps.rng_.uniform() < std::exp(log_alpha)) {
        latent = std::move(cand);
        state = std::move(cand_state);
        coords = cand_coords;
        log_post = cand_log_post;
      }
    }
    cloud->coords.row(s) = coords.transpose();
    cloud->particles.push_back(std::move(state));
    cloud->latents.push_back(std::move(latent));
  }
  ps.cloud_ = std::move(cloud);
  ps.weights_ = RealVector::Constant(n, 1.0 / static_cast<double>(n));
  ++ps.resample_count_;
  return ps;
}

ParticleSet resample(ParticleSet ps, ResampleMethod method,
                     const ResampleParams& params) {
  switch (method) {
    case ResampleMethod::liu_west:
      return ParticleSet::liu_west_impl(std::move(ps), params);
    case ResampleMethod::metropolis_hastings:
      return ParticleSet::metropolis_impl(std::move(ps), params);
  }
  throw DomainError("unknown resample method");
}

DensityMatrix bme(const ParticleSet& ps) {
  Matrix acc = Matrix::Zero(ps.dim(), ps.dim());
  for (int s = 0; s < ps.size(); ++s)
    acc += ps.weights()(s) * ps.particle(s).mat();
  return DensityMatrix::trusted(hermitize(acc));
}

CredibleEllipsoid credible_region(const ParticleSet& ps, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("alpha must lie in (0, 1)");
  std::vector<int> order(static_cast<size_t>(ps.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&ps](int a, int b) {
    return ps.weights()(a) > ps.weights()(b);
  });
  double mass = 0.0;
  std::vector<int> selected;
  for (int idx : order) {
    selected.push_back(idx);
    mass += ps.weights()(idx);
    if (mass >= 1.0 - alpha) break;
  }
  RealMatrix points(static_cast<Eigen::Index>(selected.size()),
                    ps.coords().cols());
  for (size_t k = 0; k < selected.size(); ++k)
    points.row(static_cast<Eigen::Index>(k)) = ps.coords().row(selected[k]);
  const Ellipsoid e = minimum_volume_ellipsoid(points);
  CredibleEllipsoid out;
  out.center = e.center;
  out.shape = e.shape;
  out.mass = mass;
  out.degenerate = e.degenerate;
  return out;
}

std::vector<MeasurementRecord> recorded_history(const ParticleSet& ps) {
  std::vector<MeasurementRecord> records;
  records.reserve(static_cast<size_t>(ps.history_length_));
  for (const auto* node = ps.history_.get(); node != nullptr;
       node = node->prev.get())
    records.push_back(node->record);
  std::reverse(records.begin(), records.end());
  return records;
}

ParticleSet particle_set_from_snapshot(std::vector<DensityMatrix> particles,
                                       RealVector weights,
                                       const PriorSpec& prior,
                                       const SmcPolicy& policy,
                                       std::uint64_t seed) {
  if (particles.size() < 2)
    throw DomainError("particle filter needs at least 2 particles");
  if (static_cast<Eigen::Index>(particles.size()) != weights.size())
    throw DomainError("particles and weights have different lengths");
  ParticleSet ps;
  ps.prior_ = prior;
  ps.policy_ = policy;
  ps.rng_ = Rng(seed);
  auto cloud = std::make_shared<ParticleSet::Cloud>();
  cloud->coords = coords_of(particles);
  cloud->particles = std::move(particles);
  ps.cloud_ = std::move(cloud);
  const double total = weights.sum();
  if (!(total > 0.0)) throw DomainError("weights must have positive sum");
  ps.weights_ = weights / total;
  return ps;
}

void save_particles(std::ostream& os, const std::vector<DensityMatrix>& states,
                    const RealVector& weights) {
  os.precision(17);
  for (size_t s = 0; s < states.size(); ++s) {
    os << weights(static_cast<Eigen::Index>(s));
    const Matrix& m = states[s].mat();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        os << ' ' << m(i, j).real() << ' ' << m(i, j).imag();
    os << '\n';
  }
}

void save_particles(const std::string& path, const ParticleSet& ps) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  std::vector<DensityMatrix> states;
  states.reserve(static_cast<size_t>(ps.size()));
  for (int s = 0; s < ps.size(); ++s) states.push_back(ps.particle(s));
  save_particles(os, states, ps.weights());
}

ParticleSnapshot load_particles(std::istream& is) {
  ParticleSnapshot snap;
  std::vector<double> weights;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);
    if (!ss.eof())
      throw DomainError("particle file line " + std::to_string(line_no) +
                        ": unparsable token");
    const size_t n = values.size();
    int dim = 0;
    if (n == 1 + 2 * 4) dim = 2;
    else if (n == 1 + 2 * 16) dim = 4;
    else
      throw DomainError("particle file line " + std::to_string(line_no) +
                        ": expected 9 or 33 values, got " +
                        std::to_string(n));
    if (values[0] < 0.0)
      throw DomainError("particle file line " + std::to_string(line_no) +
                        ": negative weight");
    Matrix m(dim, dim);
    size_t k = 1;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        m(i, j) = Complex(values[k], values[k + 1]);
        k += 2;
      }
    snap.states.push_back(DensityMatrix::validated(std::move(m)));
    weights.push_back(values[0]);
  }
  if (snap.states.empty()) throw DomainError("particle file is empty");
  snap.weights =
      Eigen::Map<RealVector>(weights.data(),
                             static_cast<Eigen::Index>(weights.size()));
  const double total = snap.weights.sum();
  if (std::abs(total - 1.0) > 1e-6)
    throw DomainError("particle weights sum to " + std::to_string(total) +
                      ", expected 1");
  snap.weights /= total;
  return snap;
}

ParticleSnapshot load_particles_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return load_particles(is);
}

}  // namespace qtomo
