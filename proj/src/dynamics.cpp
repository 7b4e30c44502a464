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

#include "imlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "imlab/error.hpp"

namespace imlab {

Eigen::VectorXd etd_step(const Eigen::VectorXd& decay, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& forcing, double dt) {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double mu = decay(i);
    double z = mu * dt;
    double weight = (z == 0.0) ? dt : -std::expm1(-z) / mu;
    out(i) = std::exp(-z) * x(i) + weight * forcing(i);
  }
  return out;
}

Eigen::VectorXd etd_step(const ModalSystem& system, const Eigen::VectorXd& x, double dt) {
  return etd_step(system.decay, x, system.forcing(x), dt);
}

ModalTrajectory evolve_modal(const ModalSystem& system, const Eigen::VectorXd& x0, double T, double dt,
                             int stride) {
  if (!(dt > 0.0)) throw domain_error("time step must be positive");
  if (T < 0.0) throw domain_error("final time must be non-negative");
  if (stride < 1) stride = 1;
  const long steps = std::lround(T / dt);
  ModalTrajectory traj;
  traj.dt = dt;
  traj.times.push_back(0.0);
  traj.states.push_back(x0);
  Eigen::VectorXd x = x0;
  for (long s = 1; s <= steps; ++s) {
    x = etd_step(system, x, dt);
    if (!x.allFinite() || x.norm() > 1e100) {
      throw numerical_error("integration blowup at t = " + std::to_string(s * dt));
    }
    if (s % stride == 0 || s == steps) {
      traj.times.push_back(s * dt);
      traj.states.push_back(x);
    }
  }
  return traj;
}

Eigen::VectorXd flatten(const Field& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.coeffs.data(), v.coeffs.size());
}

Field unflatten(const Eigen::VectorXd& x, const FieldShape& shape) {
  if (x.size() != static_cast<Eigen::Index>(shape.modes) * shape.components) {
    throw domain_error("flat vector does not match field shape");
  }
  Field v = shape.zeros();
  v.coeffs = Eigen::Map<const Eigen::MatrixXd>(x.data(), shape.modes, shape.components);
  return v;
}

Field advection_reaction(const Field& u, const Nonlinearity& nl) {
  if (u.components() != nl.components) throw domain_error("nonlinearity and field component counts differ");
  const int M = default_intervals(u.modes());
  Eigen::MatrixXd values = synthesize(u, M);
  Eigen::MatrixXd slope = synthesize(derivative(u), M);
  Eigen::MatrixXd out(M + 1, u.components());
  for (int j = 0; j <= M; ++j) {
    Vec uj = values.row(j).transpose();
    Vec dj = slope.row(j).transpose();
    Vec r = nl.f(uj) * dj + nl.g(uj);
    out.row(j) = -r.transpose();
  }
  return analyze(out, u.basis, u.length, u.modes());
}

Field rda_rhs(const Field& u, const Nonlinearity& nl) {
  if (u.basis != Basis::DirichletSine) throw domain_error("rda_rhs expects a sine-basis field");
  return second_derivative(u) + advection_reaction(u, nl);
}

Field neumann_rda_rhs(const Field& u, const Nonlinearity& nl) {
  if (u.basis != Basis::NeumannCosine) throw domain_error("neumann_rda_rhs expects a cosine-basis field");
  return second_derivative(u) - u + advection_reaction(u, nl);
}

ModalSystem rda_system(const FieldShape& shape, const Nonlinearity& nl) {
  ModalSystem sys;
  sys.decay = eigenvalues_of(shape.zeros());
  if (shape.basis == Basis::NeumannCosine) sys.decay.array() += 1.0;
  sys.forcing = [shape, nl](const Eigen::VectorXd& x) { return flatten(advection_reaction(unflatten(x, shape), nl)); };
  return sys;
}

ModalSystem neumann_rda_system(const FieldShape& shape, const Nonlinearity& nl) {
  if (shape.basis != Basis::NeumannCosine) throw domain_error("neumann system needs the cosine basis");
  return rda_system(shape, nl);
}

namespace {

void check_step(double dt, const StepOptions& options) {
  if (!(dt > 0.0)) throw domain_error("time step must be positive");
  if (options.lipschitz_bound > 0.0 && dt * options.lipschitz_bound > 0.5) {
    throw domain_error("time step violates dt * L_nl <= 0.5");
  }
}

Trajectory to_fields(const ModalTrajectory& m, const FieldShape& shape) {
  Trajectory t;
  t.dt = m.dt;
  t.times = m.times;
  t.states.reserve(m.states.size());
  for (const auto& x : m.states) t.states.push_back(unflatten(x, shape));
  return t;
}

}  // namespace

Field step_imex(const Field& u, double dt, const Nonlinearity& nl, const StepOptions& options) {
  check_step(dt, options);
  if (u.basis != Basis::DirichletSine) throw domain_error("step_imex expects a sine-basis field");
  FieldShape shape = shape_of(u);
  ModalSystem sys = rda_system(shape, nl);
  return unflatten(etd_step(sys, flatten(u), dt), shape);
}

Trajectory evolve(const Field& u0, double T, double dt, const Nonlinearity& nl, const StepOptions& options) {
  check_step(dt, options);
  if (u0.basis != Basis::DirichletSine) throw domain_error("evolve expects a sine-basis field");
  FieldShape shape = shape_of(u0);
  return to_fields(evolve_modal(rda_system(shape, nl), flatten(u0), T, dt, options.stride), shape);
}

Trajectory evolve_neumann(const Field& u0, double T, double dt, const Nonlinearity& nl, const StepOptions& options) {
  check_step(dt, options);
  FieldShape shape = shape_of(u0);
  return to_fields(evolve_modal(neumann_rda_system(shape, nl), flatten(u0), T, dt, options.stride), shape);
}

int dissipative_violations(const Trajectory& traj, double C, double alpha, double C_star) {
  double n0 = norm_h1(traj.states.front());
  int count = 0;
  for (size_t i = 0; i < traj.states.size(); ++i) {
    double bound = C * n0 * std::exp(-alpha * traj.times[i]) + C_star;
    if (norm_h1(traj.states[i]) > bound * (1.0 + 1e-12) + 1e-300) ++count;
  }
  return count;
}

DissipativeReport dissipative_monitor(const Trajectory& traj, double min_alpha) {
  if (traj.states.size() < 2) throw domain_error("trajectory too short for the dissipativity monitor");
  std::vector<double> norms(traj.states.size());
  for (size_t i = 0; i < norms.size(); ++i) norms[i] = norm_h1(traj.states[i]);
  const double n0 = norms.front();
  const double T = traj.times.back();
  if (min_alpha < 0.0) min_alpha = 4.0 * std::log(10.0) / T;
  double tail = 0.0;
  for (size_t i = 0; i < norms.size(); ++i)
    if (traj.times[i] >= 0.5 * T) tail = std::max(tail, norms[i]);

  DissipativeReport report;
  // Largest alpha such that the bound holds at every recorded instant; -inf if none.
  auto best_alpha = [&](double C, double C_star) {
    double alpha = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < norms.size(); ++i) {
      double excess = norms[i] - C_star;
      if (excess <= 0.0) continue;
      double t = traj.times[i];
      if (t == 0.0) {
        if (norms[i] > C * n0 + C_star) return -std::numeric_limits<double>::infinity();
        continue;
      }
      alpha = std::min(alpha, std::log(C * n0 / excess) / t);
    }
    return alpha;
  };
  const double c_values[] = {1.0, 2.0, 5.0, 10.0};
  const double star_values[] = {0.0, tail, 2.0 * tail};
  for (double C_star : star_values) {
    for (double C : c_values) {
      double alpha = best_alpha(C, C_star);
      if (alpha > 0.0 && alpha >= min_alpha) {
        report.C = C;
        report.C_star = C_star;
        // A run that never exceeds C_star admits any alpha; report the slowest decaying mode instead.
        report.alpha = std::isinf(alpha) ? 0.0 : alpha;
        report.ok = true;
        break;
      }
    }
    if (report.ok) break;
  }
  if (report.ok) report.violations = dissipative_violations(traj, report.C, report.alpha, report.C_star);

  // Integrated second-derivative bound with trapezoid in time.
  std::vector<double> curvature(traj.states.size());
  for (size_t i = 0; i < traj.states.size(); ++i) curvature[i] = norm_l2(second_derivative(traj.states[i]));
  for (size_t i = 0; i < traj.states.size(); ++i) {
    double integral = 0.0;
    for (size_t j = i; j + 1 < traj.states.size() && traj.times[j] < traj.times[i] + 1.0; ++j) {
      double h = traj.times[j + 1] - traj.times[j];
      integral += 0.5 * h * (curvature[j] * curvature[j] + curvature[j + 1] * curvature[j + 1]);
    }
    report.integrated_bound = std::max(report.integrated_bound, integral);
  }
  return report;
}

AbsorbingBall measure_absorbing_ball(const Nonlinearity& nl, const FieldShape& shape, int count,
                                     double initial_norm, double t_lo, double t_hi, double dt, Rng& rng,
                                     int stride) {
  AbsorbingBall ball;
  StepOptions options;
  options.stride = stride;
  for (int r = 0; r < count; ++r) {
    Field u0 = random_smooth_field(shape, initial_norm, 8.0, rng);
    Trajectory traj = evolve(u0, t_hi, dt, nl, options);
    for (size_t i = 0; i < traj.states.size(); ++i) {
      if (traj.times[i] >= t_lo - 1e-12) ball.sup_norm = std::max(ball.sup_norm, norm_h1(traj.states[i]));
    }
    ball.trajectories.push_back(std::move(traj));
  }
  ball.radius = 2.0 * ball.sup_norm;
  return ball;
}

}  // namespace imlab
