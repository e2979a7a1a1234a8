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

#ifndef QTOMO_CORE_MVEE_HPP
#define QTOMO_CORE_MVEE_HPP

#include "core/linalg.hpp"

namespace qtomo {

struct Ellipsoid {
  RealVector center;
  RealMatrix shape;  // (x-c)^T shape (x-c) <= 1 inside
  bool degenerate = false;
};

/// Minimum-volume enclosing ellipsoid of the rows of `points` via the
/// Khachiyan barycentric-coordinate iteration. Points that do not span the
/// full space (or fewer than dim+1 of them) yield a degenerate result with
/// the shape matrix of the affine hull inflated on its null space.
Ellipsoid minimum_volume_ellipsoid(const RealMatrix& points,
                                   double tolerance = 1e-4,
                                   int max_iterations = 20000);

/// Mahalanobis membership value (x-c)^T shape (x-c).
double ellipsoid_membership(const Ellipsoid& e, const RealVector& x);

/// log of the ellipsoid volume up to the dimension-dependent unit-ball
/// constant: -(1/2) log det(shape).
double ellipsoid_log_volume(const Ellipsoid& e);

}  // namespace qtomo

#endif  // QTOMO_CORE_MVEE_HPP
