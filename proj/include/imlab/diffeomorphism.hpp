// Copyright 2026 The imlab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <vector>

#include "imlab/nonlinearity.hpp"
#include "imlab/sampling.hpp"
#include "imlab/spectral.hpp"

namespace imlab {

// x-dependent m x m matrix on the collocation grid, with its x-derivative taken from the
// ODE right-hand side rather than by differencing.
struct MatrixField {
  double length = 1.0;
  int intervals = 0;
  std::vector<Mat> value;
  std::vector<Mat> slope;

  int components() const { return value.empty() ? 0 : static_cast<int>(value.front().rows()); }
  static MatrixField identity(double length, int intervals, int m);
  // max |a| + max |a'| with the Frobenius norm pointwise.
  double w1inf() const;
  double min_abs_det() const;
};

double w1inf_distance(const MatrixField& a, const MatrixField& b);

// Solves a' = A(x) a, a(0) = Id with one classical RK4 step per grid interval.
// 'coefficient' holds A at the 2M + 1 points of the half-step grid (nodes and midpoints).
MatrixField integrate_linear(const std::vector<Mat>& coefficient, double length);
// Solves b' = -A(x)^T b, b(0) = Id on the same grid.
MatrixField integrate_adjoint(const std::vector<Mat>& coefficient, double length);
MatrixField pointwise_inverse(const MatrixField& a);
MatrixField transpose(const MatrixField& a);

enum class FixedPointMethod {
  // a_{j+1} = solution of the linear ODE frozen at a_j.
  Picard,
  // Picard step followed by a local linear correction that drops only the projection
  // P_K from the linearization; the remaining error is driven by Q_K and decays with K.
  QuasiNewton,
};

struct FixedPointOptions {
  double tolerance = 1e-10;
  int max_iterations = 100;
  FixedPointMethod method = FixedPointMethod::QuasiNewton;
};

struct FixedPointReport {
  int iterations = 0;
  std::vector<double> residuals;  // W^{1,inf} distance between successive iterates
  double contraction = 0.0;       // max ratio of successive residuals above the round-off floor
};

// The kernel a of the change of variables together with the data that defined it.
struct Kernel {
  int K = 0;
  MatrixField a;
  Field projected;                 // P_K(a v), or P_K u for the linear problem
  Eigen::MatrixXd projected_fine;  // its values on the half-step grid
  std::vector<Mat> coefficient;    // f(P_K(.)) / 2 on the half-step grid
  FixedPointReport report;
};

// a' = f(P_K u) a / 2, a(0) = Id. Works on either basis (P_K is taken in the basis of u).
Kernel solve_a_of_u(const Field& u, int K, const Nonlinearity& nl);
// a' = f(P_K(a v)) a / 2, a(0) = Id, by fixed-point iteration. Throws a numerical error when
// the iteration does not converge, which signals K below the uniqueness threshold.
Kernel solve_a_of_v(const Field& v, int K, const Nonlinearity& nl, const FixedPointOptions& options = {});

struct InverseCheck {
  MatrixField inverse;          // pointwise inverse
  MatrixField adjoint_inverse;  // transpose of the adjoint solution
  double disagreement = 0.0;    // W^{1,inf} distance between the two
};

// Computes a^{-1} two ways and throws a consistency error if they differ by more than 1e-6.
InverseCheck inverse_matrix(const Kernel& kernel);

// Pointwise product a(x) v(x) on the collocation grid, projected back onto the basis of v.
Field multiply(const MatrixField& a, const Field& v);

// U(v) = a(v) v and V(u) = a(u)^{-1} u on the sine basis.
Field forward_map_U(const Field& v, int K, const Nonlinearity& nl, const FixedPointOptions& options = {});
Field inverse_map_V(const Field& u, int K, const Nonlinearity& nl);

struct K0Estimate {
  int K0 = 0;
  std::vector<int> tested;
  std::vector<double> contraction;  // worst measured factor per tested K
};

// Smallest K in {4, 8, ..., 512} (and K <= modes) at which the iteration converges with
// measured factor below 0.9 for every probe. Throws a numerical error if none works.
K0Estimate estimate_K0(const std::vector<Field>& probes, const Nonlinearity& nl);
// Ten random smooth probes of norm r.
K0Estimate estimate_K0(double r, const Nonlinearity& nl, const FieldShape& shape, std::uint64_t seed);

// |a(v1) - a(v2)|_{W^{1,inf}} / |v1 - v2|_{H^1}; 0 when v1 == v2.
double lipschitz_probe_a(const Field& v1, const Field& v2, int K, const Nonlinearity& nl);

}  // namespace imlab
