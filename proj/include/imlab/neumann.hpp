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

#include <optional>
#include <vector>

#include "imlab/manifold.hpp"

namespace imlab {

// State of the differentiated systems. For the Neumann problem u is on the cosine basis and
// w = du/dx on the sine basis; the other layouts are described at each right-hand side.
struct ExtendedState {
  Field u;
  Field w;
  std::optional<Field> theta_t;

  ExtendedState& operator+=(const ExtendedState& other);
  ExtendedState& operator*=(double s);
};

ExtendedState operator+(ExtendedState a, const ExtendedState& b);
ExtendedState operator-(ExtendedState a, const ExtendedState& b);
ExtendedState operator*(double s, ExtendedState a);

Eigen::VectorXd pack(const ExtendedState& s);
ExtendedState unpack(const Eigen::VectorXd& x, const ExtendedState& like);
// Weights 1 + lambda of every part, in pack order.
Eigen::VectorXd extended_h1_weights(const ExtendedState& like);
// sqrt of the summed squared H^1 norms of the parts.
double norm_h1(const ExtendedState& s);

// du/dx re-expanded on the same number of modes of the opposite basis.
Field derivative_same_size(const Field& v);

// (u, du/dx) for a cosine-basis u.
ExtendedState embed(const Field& u);
// |w - du/dx|_{L^2}.
double constraint_gap(const ExtendedState& s);

// Differentiated Neumann system on (u, w):
//   u: d^2u/dx^2 - u - f(u) w - g(u)
//   w: d^2w/dx^2 - w - chi(u, w) f'(u)[w] w - g'(u) w - f(u) dw/dx
// chi is the radial cut-off of radius 'joint_radius' in the joint variable (u, w).
ExtendedState extended_rhs(const ExtendedState& s, const Nonlinearity& nl, double joint_radius);
ModalSystem extended_system(const ExtendedState& like, const Nonlinearity& nl, double joint_radius);

struct DriftReport {
  std::vector<double> times;
  std::vector<double> drift;  // constraint_gap along the run
  double max_drift = 0.0;
  double slope = 0.0;         // least-squares slope of drift against t
};

// Runs the differentiated system from embed(u0) with exponential Euler.
DriftReport constraint_drift(const Field& u0, const Nonlinearity& nl, double joint_radius, double T, double dt,
                             int stride = 1);

// Boundary value problem d^2y/dx^2 - (1 + shift) y - f(y, dy/dx) = h, y = 0 at both ends.
struct EllipticConfig {
  double shift = 0.0;
  double threshold = -1.0;  // C_f + C_p^2 / 2 + 1/2 when measured, negative when unknown
  double tolerance = 1e-10;
  int max_iterations = 20;

  void validate() const;
};

// shift = factor * (C_f + C_p^2 / 2 + 1/2) with C_f = sup |f_u|, C_p = sup |f_p| sampled on the support.
EllipticConfig make_elliptic_config(const GradientNonlinearity& nl, double factor = 2.0);

struct EllipticSolution {
  Field y;
  double residual = 0.0;  // L^2 norm of the Galerkin residual
  int iterations = 0;
};

// Newton iteration with the dense Galerkin Jacobian; h on the sine basis.
EllipticSolution solve_elliptic(const Field& h, const EllipticConfig& cfg, const GradientNonlinearity& nl);
// Solution of the problem linearized at y with right-hand side eta.
Field solve_elliptic_tangent(const Field& y, const Field& eta, const EllipticConfig& cfg,
                             const GradientNonlinearity& nl);
// Galerkin residual d^2y/dx^2 - (1 + shift) y - P f(y, dy/dx) - h.
Field elliptic_residual(const Field& y, const Field& h, double shift, const GradientNonlinearity& nl);

// d/dx of the elliptic solution at h = w - shift u. Reproduces du/dx when w = du/dt.
Field lift_gradient(const Field& u, const Field& w, const EllipticConfig& cfg, const GradientNonlinearity& nl);
// d/dx of the tangent solution at the same point with right-hand side theta_t - shift w.
// Reproduces dw/dx when theta_t = dw/dt. Affine in theta_t.
Field lift_gradient_rate(const Field& u, const Field& w, const Field& theta_t, const EllipticConfig& cfg,
                         const GradientNonlinearity& nl);

// d^2u/dx^2 - u - P f(u, du/dx) on the basis of u.
Field gradient_rhs(const Field& u, const GradientNonlinearity& nl);
// Time derivative of gradient_rhs along v at u.
Field gradient_rhs_tangent(const Field& u, const Field& v, const GradientNonlinearity& nl);
ModalSystem gradient_system(const FieldShape& shape, const GradientNonlinearity& nl);

// Nonlocal system on sine-basis (u, w, theta_t), with du/dx and dw/dx replaced by the lifts:
//   u: d^2u/dx^2 - u - f(u, q)
//   w: d^2w/dx^2 - w - f_u w - f_p r
//   theta_t: d^2theta/dx^2 - theta - f_uu w^2 - 2 f_up w r - f_pp r^2 - f_u theta - f_p dtheta/dx
// with q = lift_gradient(u, w), r = lift_gradient_rate(u, w, theta), derivatives of f at (u, q).
ExtendedState general_system_rhs(const ExtendedState& s, const EllipticConfig& cfg, const GradientNonlinearity& nl);
ModalSystem general_system(const ExtendedState& like, const EllipticConfig& cfg, const GradientNonlinearity& nl);
// (u, du/dt, d^2u/dt^2) along the sine-basis gradient problem.
ExtendedState general_embed(const Field& u, const GradientNonlinearity& nl);

// Twice differentiated system for f(0, p) = 0: sine u, cosine w = du/dx, sine theta_t = dw/dx.
//   u: d^2u/dx^2 - u - f(u, w)
//   w: d^2w/dx^2 - w - f_u w - f_p theta
//   theta_t: d^2theta/dx^2 - theta - f_uu w^2 - 2 f_up w theta - f_pp theta^2 - f_u theta - f_p dtheta/dx
// Throws a configuration error when f(0, .) does not vanish.
ExtendedState rred_rhs(const ExtendedState& s, const GradientNonlinearity& nl);
ModalSystem rred_system(const ExtendedState& like, const GradientNonlinearity& nl);
ExtendedState rred_embed(const Field& u);
void require_zero_at_zero_state(const GradientNonlinearity& nl);

// Once differentiated Neumann system: cosine u, sine w = du/dx.
//   u: d^2u/dx^2 - u - f(u, w)
//   w: d^2w/dx^2 - w - f_u w - f_p dw/dx
ExtendedState fnd_rhs(const ExtendedState& s, const GradientNonlinearity& nl);
ModalSystem fnd_system(const ExtendedState& like, const GradientNonlinearity& nl);

struct ExtendedTrajectory {
  std::vector<double> times;
  std::vector<ExtendedState> states;
};
ExtendedTrajectory evolve_extended(const ModalSystem& system, const ExtendedState& s0, double T, double dt,
                                   int stride = 1);

// Transformed Neumann problem: w = a(u) v with da/dx = f(P_K u) a / 2, P_K on the cosine basis.
struct NeumannProblem {
  Nonlinearity nl;
  int K = 0;
  CutoffSpec cutoff;
  double joint_radius = 1.0;
};

// u: cosine basis, v: sine basis. Returns (u, v).
ExtendedState to_transformed(const ExtendedState& s, int K, const Nonlinearity& nl);
ExtendedState from_transformed(const ExtendedState& t, int K, const Nonlinearity& nl);

struct NeumannTerms {
  Kernel kernel;
  Field u_forcing;  // -f(u) a v - g(u)
  Field F1_dxv;
  Field F2;
};

NeumannTerms neumann_terms(const ExtendedState& t, const NeumannProblem& problem);
// Nonlinear part of the transformed system times phi(|u|^2 + |v|^2).
ExtendedState neumann_forcing(const ExtendedState& t, const NeumannProblem& problem);
ModalSystem neumann_transformed_system(const ExtendedState& like, const NeumannProblem& problem);

// 1 + (pi k / length)^2, the shared spectrum of both parts.
double neumann_level(int k, double length);

// P_n keeps wavenumbers below n in both parts; theta = (level(n - 1) + level(n)) / 2.
PerronProblem neumann_perron_problem(const ExtendedState& like, const NeumannProblem& problem, int n);
PerronConfig neumann_perron_config(int n, double length, double tolerance = 1e-9, double dt = 0.0);
// Gap conditions with the levels above: transport gap / level(n)^{1/2} > 4 L1, source gap > 4 L2.
GapReport neumann_gap_check(int n, double length, double L1, double L2);

struct NeumannPair {
  ExtendedState first;
  ExtendedState second;
};

// L1: transport part of the v-equation into L^2; L2: the rest into H^1.
LipschitzReport measure_neumann_lipschitz(const NeumannProblem& problem, const std::vector<NeumannPair>& pairs);
std::vector<NeumannPair> neumann_pairs(const ExtendedState& like, double radius, int count, Rng& rng);

struct EmbeddingAudit {
  double min_ratio = 0.0;  // of |E(u1) - E(u2)| / |u1 - u2|, H^1 norms
  double max_ratio = 0.0;
  int pairs = 0;
};
EmbeddingAudit embedding_audit(const std::vector<Field>& samples);

}  // namespace imlab
