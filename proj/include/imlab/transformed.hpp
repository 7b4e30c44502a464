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

#include <functional>
#include <vector>

#include "imlab/diffeomorphism.hpp"
#include "imlab/dynamics.hpp"

namespace imlab {

// phi(z) = 1 for z <= inner^2, 0 for z >= outer^2, quintic smoothstep in between.
// z is the squared H^1 norm.
struct CutoffSpec {
  double inner = 1.0;
  double outer = 2.0;

  void validate() const;
  double value(double z) const;
  double slope(double z) const;
  // Lipschitz constant of z -> phi(z).
  double lipschitz() const;
};

// Every intermediate of the transformed right-hand side at one state v.
struct TransformedTerms {
  Kernel kernel;
  Field u;                 // a v on the sine basis
  Field dt_u_low;          // P_K of the original right-hand side at u
  MatrixField dt_a;        // time derivative of a and its x-derivative
  std::vector<Mat> a_xx;   // second x-derivative of a at the nodes
  std::vector<Mat> F1;     // matrix coefficient of the transport term at the nodes
  Field F1_dxv;            // F1 dv/dx
  Field F2;
  double F2_boundary = 0.0;  // max |F2| over the two boundary nodes
};

TransformedTerms transformed_terms(const Field& v, int K, const Nonlinearity& nl,
                                   const FixedPointOptions& options = {});
// d/dx b = f(p) b / 2 + f'(p)[q] a / 2, b(0) = 0, with p = P_K u and q = P_K du/dt.
MatrixField time_derivative_a(const Kernel& kernel, const Field& dt_u_low, const Nonlinearity& nl);

struct TransformedProblem {
  Nonlinearity nl;
  int K = 0;
  CutoffSpec cutoff;
  FixedPointOptions options;
};

// phi(|v|^2) F1(v) dv/dx, phi(|v|^2) F2(v) and their sum. Zero without any kernel solve when phi = 0.
Field cut_transport(const Field& v, const TransformedProblem& problem);
Field cut_source(const Field& v, const TransformedProblem& problem);
Field cut_forcing(const Field& v, const TransformedProblem& problem);
// d^2v/dx^2 + cut_forcing(v).
Field transformed_rhs(const Field& v, const TransformedProblem& problem);

ModalSystem transformed_system(const FieldShape& shape, const TransformedProblem& problem);
// Exponential Euler, the scheme used for the original equation.
Trajectory evolve_transformed(const Field& v0, double T, double dt, const TransformedProblem& problem,
                              int stride = 1);

struct EquivalenceReport {
  std::vector<double> times;
  std::vector<double> deviation;  // |V(u(t)) - v(t)|_{H^1}
  double max_deviation = 0.0;
};

// Runs the original equation from u0 and the transformed one from V(u0) with the same step.
EquivalenceReport equivalence_check(const Field& u0, const TransformedProblem& problem, double T, double dt,
                                    int stride = 1);

using FieldMap = std::function<Field(const Field&)>;
using FieldNorm = std::function<double(const Field&)>;

struct SamplePair {
  Field first;
  Field second;
};

struct LipschitzEstimate {
  double constant = 0.0;
  int samples = 0;
  int argmax = -1;
};

// max over pairs of range(op(a) - op(b)) / domain(a - b). Pairs with equal members are skipped.
LipschitzEstimate measure_lipschitz(const FieldMap& op, const FieldNorm& domain, const FieldNorm& range,
                                    const std::vector<SamplePair>& pairs, int threads = 0);

// Independent random pairs with norms up to 'radius' plus perturbation pairs (v, v + eps d)
// with eps in {1e-2, 1e-4}. Samples mix smooth, power-law, kink and localized fields.
std::vector<SamplePair> lipschitz_pairs(const FieldShape& shape, double radius, int count, Rng& rng);

// Co-located localized fields with widths from length/8 down to length/512, paired with each
// other and with small co-located perturbations. At fixed H^1 norm a field of width w puts
// its sup-norm tail at wavenumber ~ length/w, so the sweep covers every K up to the width floor.
std::vector<SamplePair> multiscale_pairs(const FieldShape& shape, double radius, int count, Rng& rng);

struct LipschitzReport {
  int K = 0;
  double L1 = 0.0;  // transport term into L^2
  double L2 = 0.0;  // source term into H^1
  int samples = 0;
  int argmax_L1 = -1;
  int argmax_L2 = -1;
};

LipschitzReport measure_transformed_lipschitz(const TransformedProblem& problem,
                                              const std::vector<SamplePair>& pairs, bool with_source = true,
                                              int threads = 0);

// max over the nodes of the Frobenius norm of F1(v).
double sup_F1(const Field& v, int K, const Nonlinearity& nl);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace imlab
