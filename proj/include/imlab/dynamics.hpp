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

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "imlab/nonlinearity.hpp"
#include "imlab/sampling.hpp"
#include "imlab/spectral.hpp"

namespace imlab {

// dx/dt = -decay .* x + forcing(x) on a flat coefficient vector.
struct ModalSystem {
  Eigen::VectorXd decay;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> forcing;
};

// Exponential Euler: the linear part is exact modewise, the forcing is frozen over the step.
Eigen::VectorXd etd_step(const ModalSystem& system, const Eigen::VectorXd& x, double dt);
// Same step with a precomputed forcing value.
Eigen::VectorXd etd_step(const Eigen::VectorXd& decay, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& forcing, double dt);

struct ModalTrajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  double dt = 0.0;
};

// Records every 'stride'-th step, always including t = 0 and the final time.
ModalTrajectory evolve_modal(const ModalSystem& system, const Eigen::VectorXd& x0, double T, double dt,
                             int stride = 1);

Eigen::VectorXd flatten(const Field& v);
Field unflatten(const Eigen::VectorXd& x, const FieldShape& shape);

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> states;
  double dt = 0.0;
};

// -(f(u) du/dx + g(u)) projected back onto the basis of u. Works for both bases.
Field advection_reaction(const Field& u, const Nonlinearity& nl);

// d^2u/dx^2 - f(u) du/dx - g(u) on the sine basis.
Field rda_rhs(const Field& u, const Nonlinearity& nl);
// d^2u/dx^2 - u - f(u) du/dx - g(u) on the cosine basis.
Field neumann_rda_rhs(const Field& u, const Nonlinearity& nl);

struct StepOptions {
  // When positive, dt * lipschitz_bound must not exceed 0.5.
  double lipschitz_bound = 0.0;
  int stride = 1;
};

Field step_imex(const Field& u, double dt, const Nonlinearity& nl, const StepOptions& options = {});
Trajectory evolve(const Field& u0, double T, double dt, const Nonlinearity& nl, const StepOptions& options = {});
// Same scheme for the cosine-basis problem with the extra damping term.
Trajectory evolve_neumann(const Field& u0, double T, double dt, const Nonlinearity& nl,
                          const StepOptions& options = {});

ModalSystem rda_system(const FieldShape& shape, const Nonlinearity& nl);
ModalSystem neumann_rda_system(const FieldShape& shape, const Nonlinearity& nl);

struct DissipativeReport {
  double C = 0.0;
  double alpha = 0.0;
  double C_star = 0.0;
  bool ok = false;
  // max over t of the integral over [t, t+1] of ||d^2u/dx^2||^2.
  double integrated_bound = 0.0;
  int violations = 0;
};

// Number of recorded instants where ||u(t)|| > C ||u(0)|| e^{-alpha t} + C_star (H^1 norms).
int dissipative_violations(const Trajectory& traj, double C, double alpha, double C_star);

// Searches C in {1, 2, 5, 10} and C_star in {0, tail, 2 tail} (tail = sup of ||u|| over the
// second half of the run) for the first admissible pair, then takes the largest alpha for it.
// A pair is admissible when its largest alpha is at least min_alpha; the default
// 4 ln(10) / T asks the transient term to lose four decades over the record, which rules
// out the degenerate C_star = 0 fits that any finite record admits with a tiny alpha.
DissipativeReport dissipative_monitor(const Trajectory& traj, double min_alpha = -1.0);

struct AbsorbingBall {
  double radius = 0.0;   // R
  double sup_norm = 0.0;  // sup over the sampling window
  std::vector<Trajectory> trajectories;
};

// R = 2 sup ||u(t)||_{H^1} for t in [t_lo, t_hi] over 'count' runs from random data of norm 'initial_norm'.
AbsorbingBall measure_absorbing_ball(const Nonlinearity& nl, const FieldShape& shape, int count,
                                     double initial_norm, double t_lo, double t_hi, double dt, Rng& rng,
                                     int stride = 100);

}  // namespace imlab
