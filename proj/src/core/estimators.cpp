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

#include "core/estimators.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace qtomo {

namespace {

void check_counts(const std::vector<CountVector>& counts,
                  const std::vector<Povm>& measurements) {
  if (counts.empty()) throw DomainError("no counts provided");
  for (const CountVector& c : counts) {
    if (c.measurement_id() < 0 ||
        c.measurement_id() >= static_cast<int>(measurements.size()))
      throw DomainError("count vector references an unknown measurement");
    const Povm& m = measurements[static_cast<size_t>(c.measurement_id())];
    if (static_cast<int>(c.counts().size()) != m.n_outcomes())
      throw DomainError("count vector length does not match outcomes");
  }
}

int counts_dim(const std::vector<CountVector>& counts,
               const std::vector<Povm>& measurements) {
  return measurements[static_cast<size_t>(counts[0].measurement_id())].dim();
}

double log_det(const DensityMatrix& rho) {
  const RealVector lam = hermitian_eigenvalues(rho.mat());
  double s = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    s += std::log(std::max(lam(i), kEigenvalueClamp));
  return s;
}

}  // namespace

CountVector::CountVector(int measurement_id, std::vector<long> counts)
    : measurement_id_(measurement_id), counts_(std::move(counts)) {
  total_ = 0;
  for (long c : counts_) {
    if (c < 0) throw DomainError("negative count");
    total_ += c;
  }
  if (total_ <= 0) throw DomainError("count vector has no events");
}

LinearInversionResult linear_inversion(
    const std::vector<CountVector>& counts,
    const std::vector<Povm>& measurements) {
  check_counts(counts, measurements);
  const int dim = counts_dim(counts, measurements);
  const int n_params = dim * dim - 1;

  // Rows: one per outcome of every counted measurement, in coordinates
  // frequency = m0 + m . s.
  int n_rows = 0;
  for (const CountVector& c : counts)
    n_rows += static_cast<int>(c.counts().size());
  RealMatrix design(n_rows, n_params);
  RealVector target(n_rows);
  int row = 0;
  for (const CountVector& c : counts) {
    const Povm& m = measurements[static_cast<size_t>(c.measurement_id())];
    if (m.dim() != dim) throw DimensionError("mixed dimensions in counts");
    for (int k = 0; k < m.n_outcomes(); ++k) {
      design.row(row) = m.coords(k).transpose();
      target(row) = c.frequency(k) - m.coord_offset(k);
      ++row;
    }
  }
  if (matrix_rank(design) < n_params)
    throw IncompleteDesignError(
        "measurement set is not tomographically complete");

  const RealVector s =
      design.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(target);
  LinearInversionResult result;
  result.rho_hat = matrix_from_coordinates(dim, s);
  result.physical =
      hermitian_eigenvalues(result.rho_hat).minCoeff() >= -kPsdTol;
  return result;
}

double log_likelihood(const DensityMatrix& rho,
                      const std::vector<CountVector>& counts,
                      const std::vector<Povm>& measurements) {
  check_counts(counts, measurements);
  double ll = 0.0;
  for (const CountVector& c : counts) {
    const Povm& m = measurements[static_cast<size_t>(c.measurement_id())];
    if (m.dim() != rho.dim())
      throw DimensionError("state and measurement dimensions do not match");
    for (int k = 0; k < m.n_outcomes(); ++k) {
      const long nk = c.counts()[static_cast<size_t>(k)];
      if (nk == 0) continue;
      const double p = (m.effect(k) * rho.mat()).trace().real();
      if (p <= 0.0) return -std::numeric_limits<double>::infinity();
      ll += static_cast<double>(nk) * std::log(p);
    }
  }
  return ll;
}

DensityMatrix mle_estimate(const std::vector<CountVector>& counts,
                           const std::vector<Povm>& measurements,
                           const MleOptions& options) {
  check_counts(counts, measurements);
  const int dim = counts_dim(counts, measurements);
  {
    // Completeness gate, same design-matrix rank test as linear inversion.
    (void)linear_inversion(counts, measurements);
  }
  const double beta = options.hedging_beta.value_or(0.0);

  double total_counts = 0.0;
  for (const CountVector& c : counts)
    total_counts += static_cast<double>(c.total());

  auto objective = [&](const DensityMatrix& rho) {
    double obj = log_likelihood(rho, counts, measurements);
    if (beta > 0.0) obj += beta * log_det(rho);
    return obj;
  };

  // Gradient-like operator R = sum_k (N_k / p_k) M_k (+ beta rho^{-1}).
  auto r_operator = [&](const DensityMatrix& rho) {
    Matrix r = Matrix::Zero(dim, dim);
    for (const CountVector& c : counts) {
      const Povm& m = measurements[static_cast<size_t>(c.measurement_id())];
      for (int k = 0; k < m.n_outcomes(); ++k) {
        const long nk = c.counts()[static_cast<size_t>(k)];
        if (nk == 0) continue;
        const double p = std::max(
            (m.effect(k) * rho.mat()).trace().real(), kEigenvalueClamp);
        r += (static_cast<double>(nk) / p) * m.effect(k);
      }
    }
    if (beta > 0.0) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(rho.mat());
      const RealVector lam = es.eigenvalues().cwiseMax(kEigenvalueClamp);
      r += beta * (es.eigenvectors() * lam.cwiseInverse().asDiagonal() *
                   es.eigenvectors().adjoint());
    }
    return Matrix(r / (total_counts + beta * dim));
  };

  DensityMatrix rho = DensityMatrix::trusted(
      Matrix::Identity(dim, dim) / static_cast<double>(dim));
  double best = objective(rho);

  for (int it = 0; it < options.max_iterations; ++it) {
    const Matrix r = r_operator(rho);
    // Full R rho R step; fall back to diluted steps until the objective
    // improves.
    double eps = 1.0;
    bool accepted = false;
    for (int attempt = 0; attempt < 24; ++attempt) {
      Matrix step;
      if (attempt == 0) {
        step = r * rho.mat() * r;
      } else {
        const Matrix damped =
            (Matrix::Identity(dim, dim) + eps * r) / (1.0 + eps);
        step = damped * rho.mat() * damped;
        eps *= 0.5;
      }
      step = hermitize(step);
      const double tr = step.trace().real();
      if (!(tr > 0.0)) continue;
      DensityMatrix candidate = DensityMatrix::trusted(step / tr);
      const double obj = objective(candidate);
      if (obj >= best - 1e-15) {
        const double gain = obj - best;
        rho = candidate;
        best = obj;
        accepted = true;
        if (gain < options.gain_tolerance) return rho;
        break;
      }
    }
    if (!accepted) return rho;  // stalled at a fixed point
  }
  throw MleConvergenceError("MLE did not converge within max iterations",
                            rho.mat());
}

RealMatrix fisher_information(const DensityMatrix& rho,
                              const std::vector<Povm>& measurements) {
  if (measurements.empty()) throw DomainError("no measurements provided");
  if (hermitian_eigenvalues(rho.mat()).minCoeff() <= 1e-6)
    throw DomainError("fisher_information requires an interior state");
  const int dim = rho.dim();
  const int n_params = dim * dim - 1;
  const RealVector s = state_coordinates(rho.mat());

  RealMatrix info = RealMatrix::Zero(n_params, n_params);
  for (const Povm& m : measurements) {
    if (m.dim() != dim)
      throw DimensionError("state and measurement dimensions do not match");
    for (int k = 0; k < m.n_outcomes(); ++k) {
      const double p = m.coord_offset(k) + m.coords(k).dot(s);
      if (p <= 1e-12) throw DomainError("outcome with vanishing probability");
      // dp/ds_j = Tr(M G_j)/dim = coords(k)_j.
      info += (m.coords(k) * m.coords(k).transpose()) / p;
    }
  }
  // Set normalization: average over the K settings, scaled so the cycled
  // six-state schedule gives Var(s_i) = (3/(2N))(1 - s_i^2).
  info *= 2.0 / static_cast<double>(measurements.size());
  return info;
}

RealVector cramer_rao_floor(const DensityMatrix& rho,
                            const std::vector<Povm>& measurements, long n) {
  if (n <= 0) throw DomainError("sample size must be positive");
  const RealMatrix info = fisher_information(rho, measurements);
  Eigen::FullPivLU<RealMatrix> lu(info);
  if (!lu.isInvertible())
    throw DomainError("Fisher information matrix is singular");
  const RealMatrix inv = lu.inverse();
  return inv.diagonal() / static_cast<double>(n);
}

}  // namespace qtomo
