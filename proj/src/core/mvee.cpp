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

#include "core/mvee.hpp"

#include <cmath>

namespace qtomo {

Ellipsoid minimum_volume_ellipsoid(const RealMatrix& points, double tolerance,
                                   int max_iterations) {
  const Eigen::Index m = points.rows();
  const Eigen::Index d = points.cols();
  Ellipsoid out;
  if (m == 0) {
    out.center = RealVector::Zero(d);
    out.shape = RealMatrix::Zero(d, d);
    out.degenerate = true;
    return out;
  }
  if (m == 1) {
    out.center = points.row(0).transpose();
    out.shape = RealMatrix::Zero(d, d);
    out.degenerate = true;
    return out;
  }

  // Lifted points q = [x; 1]; Khachiyan iteration on the weights u.
  RealMatrix q(d + 1, m);
  q.topRows(d) = points.transpose();
  q.row(d).setOnes();

  RealVector u = RealVector::Constant(m, 1.0 / static_cast<double>(m));
  const double ridge = 1e-12;
  for (int it = 0; it < max_iterations; ++it) {
    RealMatrix x = q * u.asDiagonal() * q.transpose();
    x += ridge * RealMatrix::Identity(d + 1, d + 1);
    const RealMatrix xinv = x.ldlt().solve(RealMatrix::Identity(d + 1, d + 1));
    // Mahalanobis values of all points under the current ellipsoid.
    RealVector mvals(m);
    for (Eigen::Index j = 0; j < m; ++j)
      mvals(j) = q.col(j).dot(xinv * q.col(j));
    Eigen::Index j_max;
    const double maximum = mvals.maxCoeff(&j_max);
    const double step = (maximum - d - 1.0) / ((d + 1.0) * (maximum - 1.0));
    if (step <= tolerance / (d + 1.0)) break;
    u *= (1.0 - step);
    u(j_max) += step;
  }

  out.center = points.transpose() * u;
  RealMatrix scatter = points.transpose() * u.asDiagonal() * points -
                       out.center * out.center.transpose();
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(scatter);
  const double lam_max = es.eigenvalues().maxCoeff();
  const double rank_cut = std::max(lam_max, 1.0) * 1e-12;
  out.degenerate = m < d + 1 || es.eigenvalues().minCoeff() <= rank_cut;
  // shape = scatter^{-1}/d, pseudo-inverted on the affine hull; null
  // directions are given a large curvature so membership stays finite.
  RealVector inv_lam(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double lam = es.eigenvalues()(i);
    inv_lam(i) = lam > rank_cut ? 1.0 / (lam * d) : 1.0 / (rank_cut * d);
  }
  out.shape = es.eigenvectors() * inv_lam.asDiagonal() *
              es.eigenvectors().transpose();
  // Guarantee enclosure despite the finite tolerance: inflate so the
  // farthest input point sits on the boundary when it pokes out.
  double worst = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const RealVector x = points.row(j).transpose();
    worst = std::max(worst, ellipsoid_membership(out, x));
  }
  if (worst > 1.0) out.shape /= worst;
  return out;
}

double ellipsoid_membership(const Ellipsoid& e, const RealVector& x) {
  const RealVector diff = x - e.center;
  return diff.dot(e.shape * diff);
}

double ellipsoid_log_volume(const Ellipsoid& e) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(e.shape);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    logdet += std::log(std::max(es.eigenvalues()(i), 1e-300));
  return -0.5 * logdet;
}

}  // namespace qtomo
