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

#include "imlab/neumann.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "imlab/error.hpp"

namespace imlab {

namespace {

Vec row_vec(const Eigen::MatrixXd& values, int j) { return values.row(j).transpose(); }

Field analyze_rows(const std::vector<Vec>& rows, Basis basis, double length, int modes) {
  Eigen::MatrixXd values(rows.size(), rows.front().size());
  for (size_t j = 0; j < rows.size(); ++j) values.row(j) = rows[j].transpose();
  return analyze(values, basis, length, modes);
}

Field analyze_scalar(const Eigen::VectorXd& values, Basis basis, double length, int modes) {
  return analyze(Eigen::MatrixXd(values), basis, length, modes);
}

// d^2v/dx^2 - v.
Field damped_laplacian(const Field& v) { return second_derivative(v) - v; }

Field zeros_like(const Field& v) { return Field::zeros(v.basis, v.length, v.modes(), v.components()); }

void require_scalar(const Field& v, const char* what) {
  if (v.components() != 1) throw domain_error(std::string(what) + " takes scalar fields");
}

void require_same_size(const Field& a, const Field& b) {
  if (a.modes() != b.modes() || a.components() != b.components() || a.length != b.length) {
    throw domain_error("state parts must share modes, components and length");
  }
}

ExtendedState linear_part(const ExtendedState& s) {
  ExtendedState out{damped_laplacian(s.u), damped_laplacian(s.w), std::nullopt};
  if (s.theta_t) out.theta_t = damped_laplacian(*s.theta_t);
  return out;
}

ModalSystem state_system(const ExtendedState& like, std::function<ExtendedState(const ExtendedState&)> forcing) {
  ModalSystem system;
  system.decay = extended_h1_weights(like);
  system.forcing = [like, forcing](const Eigen::VectorXd& x) { return pack(forcing(unpack(x, like))); };
  return system;
}

}  // namespace

ExtendedState& ExtendedState::operator+=(const ExtendedState& other) {
  u += other.u;
  w += other.w;
  if (theta_t.has_value() != other.theta_t.has_value()) throw domain_error("state layouts differ");
  if (theta_t) *theta_t += *other.theta_t;
  return *this;
}

ExtendedState& ExtendedState::operator*=(double s) {
  u *= s;
  w *= s;
  if (theta_t) *theta_t *= s;
  return *this;
}

ExtendedState operator+(ExtendedState a, const ExtendedState& b) { return a += b; }
ExtendedState operator-(ExtendedState a, const ExtendedState& b) { return a += -1.0 * b; }
ExtendedState operator*(double s, ExtendedState a) { return a *= s; }

Eigen::VectorXd pack(const ExtendedState& s) {
  Eigen::VectorXd a = flatten(s.u), b = flatten(s.w);
  Eigen::VectorXd c = s.theta_t ? flatten(*s.theta_t) : Eigen::VectorXd();
  Eigen::VectorXd x(a.size() + b.size() + c.size());
  x << a, b, c;
  return x;
}

ExtendedState unpack(const Eigen::VectorXd& x, const ExtendedState& like) {
  const Eigen::Index nu = like.u.coeffs.size(), nw = like.w.coeffs.size();
  const Eigen::Index nt = like.theta_t ? like.theta_t->coeffs.size() : 0;
  if (x.size() != nu + nw + nt) throw domain_error("flat state has the wrong size");
  ExtendedState s;
  s.u = unflatten(x.segment(0, nu), shape_of(like.u));
  s.w = unflatten(x.segment(nu, nw), shape_of(like.w));
  if (like.theta_t) s.theta_t = unflatten(x.segment(nu + nw, nt), shape_of(*like.theta_t));
  return s;
}

Eigen::VectorXd extended_h1_weights(const ExtendedState& like) {
  Eigen::VectorXd a = h1_weights(like.u), b = h1_weights(like.w);
  Eigen::VectorXd c = like.theta_t ? h1_weights(*like.theta_t) : Eigen::VectorXd();
  Eigen::VectorXd x(a.size() + b.size() + c.size());
  x << a, b, c;
  return x;
}

double norm_h1(const ExtendedState& s) {
  double z = norm_h1_squared(s.u) + norm_h1_squared(s.w);
  if (s.theta_t) z += norm_h1_squared(*s.theta_t);
  return std::sqrt(z);
}

Field derivative_same_size(const Field& v) { return resized(derivative(v), v.modes()); }

ExtendedState embed(const Field& u) {
  if (u.basis != Basis::NeumannCosine) throw domain_error("embed takes a cosine-basis field");
  return {u, derivative_same_size(u), std::nullopt};
}

double constraint_gap(const ExtendedState& s) { return norm_l2(s.w - derivative_same_size(s.u)); }

namespace {

ExtendedState extended_forcing(const ExtendedState& s, const Nonlinearity& nl, double joint_radius) {
  require_same_size(s.u, s.w);
  const int m = s.u.components();
  if (2 * m > kMaxComponents) throw domain_error("too many components for the joint cut-off");
  const int M = default_intervals(s.u.modes());
  Eigen::MatrixXd U = synthesize(s.u, M), W = synthesize(s.w, M), Wx = synthesize(derivative(s.w), M);
  RadialCutoff joint{joint_radius};
  std::vector<Vec> fu_rows(M + 1), fw_rows(M + 1);
  Vec z(2 * m);
  for (int j = 0; j <= M; ++j) {
    Vec u = row_vec(U, j), w = row_vec(W, j);
    Mat f = nl.f(u);
    fu_rows[j] = -(f * w + nl.g(u));
    z << u, w;
    double chi = joint.value(z);
    Vec quadratic = chi == 0.0 ? Vec(Vec::Zero(m)) : Vec(chi * (nl.df(u, w) * w));
    fw_rows[j] = -(quadratic + nl.dg(u) * w + f * row_vec(Wx, j));
  }
  return {analyze_rows(fu_rows, s.u.basis, s.u.length, s.u.modes()),
          analyze_rows(fw_rows, s.w.basis, s.w.length, s.w.modes()), std::nullopt};
}

}  // namespace

ExtendedState extended_rhs(const ExtendedState& s, const Nonlinearity& nl, double joint_radius) {
  return linear_part(s) + extended_forcing(s, nl, joint_radius);
}

ModalSystem extended_system(const ExtendedState& like, const Nonlinearity& nl, double joint_radius) {
  if (like.u.basis != Basis::NeumannCosine || like.w.basis != Basis::DirichletSine) {
    throw domain_error("the differentiated Neumann system needs cosine u and sine w");
  }
  return state_system(like, [nl, joint_radius](const ExtendedState& s) {
    return extended_forcing(s, nl, joint_radius);
  });
}

ExtendedTrajectory evolve_extended(const ModalSystem& system, const ExtendedState& s0, double T, double dt,
                                   int stride) {
  ModalTrajectory modal = evolve_modal(system, pack(s0), T, dt, stride);
  ExtendedTrajectory traj;
  traj.times = modal.times;
  for (const auto& x : modal.states) traj.states.push_back(unpack(x, s0));
  return traj;
}

DriftReport constraint_drift(const Field& u0, const Nonlinearity& nl, double joint_radius, double T, double dt,
                             int stride) {
  ExtendedState s0 = embed(u0);
  ExtendedTrajectory traj = evolve_extended(extended_system(s0, nl, joint_radius), s0, T, dt, stride);
  DriftReport r;
  r.times = traj.times;
  for (const auto& s : traj.states) {
    r.drift.push_back(constraint_gap(s));
    r.max_drift = std::max(r.max_drift, r.drift.back());
  }
  r.slope = fit_slope(r.times, r.drift);
  return r;
}

void EllipticConfig::validate() const {
  if (!(shift > 0.0)) throw config_error("elliptic shift must be positive");
  if (threshold >= 0.0 && !(shift > threshold)) {
    throw config_error("elliptic shift " + std::to_string(shift) + " does not exceed the coercivity threshold " +
                       std::to_string(threshold));
  }
  if (!(tolerance > 0.0)) throw config_error("elliptic tolerance must be positive");
  if (max_iterations < 1) throw config_error("elliptic solve needs at least one iteration");
}

EllipticConfig make_elliptic_config(const GradientNonlinearity& nl, double factor) {
  if (!(factor > 1.0)) throw config_error("shift factor must exceed 1");
  GradientBounds b = gradient_bounds(nl);
  EllipticConfig cfg;
  cfg.threshold = b.fu + 0.5 * b.fp * b.fp + 0.5;
  cfg.shift = factor * cfg.threshold;
  return cfg;
}

Field elliptic_residual(const Field& y, const Field& h, double shift, const GradientNonlinearity& nl) {
  require_scalar(y, "elliptic residual");
  const int M = default_intervals(y.modes());
  Eigen::VectorXd Y = synthesize(y, M).col(0), P = synthesize(derivative(y), M).col(0);
  Eigen::VectorXd F(M + 1);
  for (int j = 0; j <= M; ++j) F(j) = nl.f(Y(j), P(j));
  Field r = second_derivative(y) - (1.0 + shift) * y;
  r -= analyze_scalar(F, y.basis, y.length, y.modes());
  r -= resized(h, y.modes());
  return r;
}

namespace {

// Galerkin matrix of z -> d^2z/dx^2 - (1 + shift) z - P(f_u z + f_p dz/dx) at y.
Eigen::MatrixXd elliptic_jacobian(const Field& y, double shift, const GradientNonlinearity& nl) {
  const int N = y.modes();
  const int M = default_intervals(N);
  const double L = y.length;
  Grid grid = make_grid(L, M);
  Eigen::VectorXd Y = synthesize(y, M).col(0), P = synthesize(derivative(y), M).col(0);
  Eigen::MatrixXd E(M + 1, N), Ex(M + 1, N);
  const double scale = std::sqrt(2.0 / L);
  for (int i = 0; i < N; ++i) {
    const double k = (i + 1) * std::numbers::pi / L;
    for (int j = 0; j <= M; ++j) {
      E(j, i) = scale * std::sin(k * grid.x(j));
      Ex(j, i) = scale * k * std::cos(k * grid.x(j));
    }
  }
  Eigen::VectorXd wu(M + 1), wp(M + 1);
  for (int j = 0; j <= M; ++j) {
    wu(j) = grid.weights(j) * nl.fu(Y(j), P(j));
    wp(j) = grid.weights(j) * nl.fp(Y(j), P(j));
  }
  Eigen::MatrixXd J = -(E.transpose() * wu.asDiagonal() * E + E.transpose() * wp.asDiagonal() * Ex);
  for (int i = 0; i < N; ++i) J(i, i) -= y.eigenvalue_at(i) + 1.0 + shift;
  return J;
}

struct Lifted {
  Field y;
  Field tangent;
};

}  // namespace

EllipticSolution solve_elliptic(const Field& h, const EllipticConfig& cfg, const GradientNonlinearity& nl) {
  cfg.validate();
  require_scalar(h, "elliptic solve");
  if (h.basis != Basis::DirichletSine) throw domain_error("the elliptic problem lives on the sine basis");
  EllipticSolution sol;
  sol.y = h;
  for (int i = 0; i < h.modes(); ++i) sol.y.coeffs(i, 0) = -h.coeffs(i, 0) / (h.eigenvalue_at(i) + 1.0 + cfg.shift);
  Field r = elliptic_residual(sol.y, h, cfg.shift, nl);
  sol.residual = norm_l2(r);
  for (int it = 0; it < cfg.max_iterations && sol.residual > cfg.tolerance; ++it) {
    Eigen::VectorXd step = elliptic_jacobian(sol.y, cfg.shift, nl).partialPivLu().solve(r.coeffs.col(0));
    // Backtrack if the full step does not reduce the residual.
    double t = 1.0;
    for (int halving = 0; halving < 12; ++halving, t *= 0.5) {
      Field trial = sol.y;
      trial.coeffs.col(0) -= t * step;
      Field rt = elliptic_residual(trial, h, cfg.shift, nl);
      double nt = norm_l2(rt);
      if (nt < sol.residual || halving == 11) {
        sol.y = trial;
        r = rt;
        sol.residual = nt;
        break;
      }
    }
    sol.iterations = it + 1;
  }
  if (!std::isfinite(sol.residual) || sol.residual > cfg.tolerance) {
    throw numerical_error("elliptic Newton iteration stalled at residual " + std::to_string(sol.residual) +
                          "; raise the shift");
  }
  return sol;
}

Field solve_elliptic_tangent(const Field& y, const Field& eta, const EllipticConfig& cfg,
                             const GradientNonlinearity& nl) {
  require_scalar(y, "tangent solve");
  Field out = zeros_like(y);
  Field rhs = resized(eta, y.modes());
  out.coeffs.col(0) = elliptic_jacobian(y, cfg.shift, nl).partialPivLu().solve(rhs.coeffs.col(0));
  return out;
}

Field lift_gradient(const Field& u, const Field& w, const EllipticConfig& cfg, const GradientNonlinearity& nl) {
  return derivative(solve_elliptic(w - cfg.shift * u, cfg, nl).y);
}

Field lift_gradient_rate(const Field& u, const Field& w, const Field& theta_t, const EllipticConfig& cfg,
                         const GradientNonlinearity& nl) {
  Field y = solve_elliptic(w - cfg.shift * u, cfg, nl).y;
  return derivative(solve_elliptic_tangent(y, theta_t - cfg.shift * w, cfg, nl));
}

namespace {

Field gradient_forcing(const Field& u, const GradientNonlinearity& nl) {
  require_scalar(u, "gradient nonlinearity");
  const int M = default_intervals(u.modes());
  Eigen::VectorXd U = synthesize(u, M).col(0), P = synthesize(derivative(u), M).col(0);
  Eigen::VectorXd F(M + 1);
  for (int j = 0; j <= M; ++j) F(j) = -nl.f(U(j), P(j));
  return analyze_scalar(F, u.basis, u.length, u.modes());
}

}  // namespace

Field gradient_rhs(const Field& u, const GradientNonlinearity& nl) {
  return damped_laplacian(u) + gradient_forcing(u, nl);
}

Field gradient_rhs_tangent(const Field& u, const Field& v, const GradientNonlinearity& nl) {
  require_scalar(u, "gradient nonlinearity");
  require_compatible(u, v);
  const int M = default_intervals(u.modes());
  Eigen::VectorXd U = synthesize(u, M).col(0), P = synthesize(derivative(u), M).col(0);
  Eigen::VectorXd V = synthesize(v, M).col(0), Vx = synthesize(derivative(v), M).col(0);
  Eigen::VectorXd F(M + 1);
  for (int j = 0; j <= M; ++j) F(j) = -(nl.fu(U(j), P(j)) * V(j) + nl.fp(U(j), P(j)) * Vx(j));
  return damped_laplacian(v) + analyze_scalar(F, u.basis, u.length, u.modes());
}

ModalSystem gradient_system(const FieldShape& shape, const GradientNonlinearity& nl) {
  if (shape.components != 1) throw domain_error("gradient nonlinearity takes scalar fields");
  ModalSystem system;
  system.decay = h1_weights(shape.zeros());
  system.forcing = [shape, nl](const Eigen::VectorXd& x) { return flatten(gradient_forcing(unflatten(x, shape), nl)); };
  return system;
}

namespace {

struct SecondOrderTerms {
  double fuu, fup, fpp, fu, fp;
};

SecondOrderTerms derivatives_at(const GradientNonlinearity& nl, double u, double p) {
  return {nl.fuu(u, p), nl.fup(u, p), nl.fpp(u, p), nl.fu(u, p), nl.fp(u, p)};
}

// Forcing of the three-equation systems. 'slope' stands in for du/dx and 'rate' for dw/dx.
ExtendedState three_part_forcing(const ExtendedState& s, const Field& slope, const Field& rate,
                                 const GradientNonlinearity& nl) {
  const Field& theta = *s.theta_t;
  const int M = default_intervals(s.u.modes());
  Eigen::VectorXd U = synthesize(s.u, M).col(0), W = synthesize(s.w, M).col(0);
  Eigen::VectorXd Th = synthesize(theta, M).col(0), Thx = synthesize(derivative(theta), M).col(0);
  Eigen::VectorXd Q = synthesize(slope, M).col(0), R = synthesize(rate, M).col(0);
  Eigen::VectorXd fu_rows(M + 1), fw_rows(M + 1), ft_rows(M + 1);
  for (int j = 0; j <= M; ++j) {
    SecondOrderTerms d = derivatives_at(nl, U(j), Q(j));
    fu_rows(j) = -nl.f(U(j), Q(j));
    fw_rows(j) = -(d.fu * W(j) + d.fp * R(j));
    ft_rows(j) = -(d.fuu * W(j) * W(j) + 2.0 * d.fup * W(j) * R(j) + d.fpp * R(j) * R(j) + d.fu * Th(j) +
                   d.fp * Thx(j));
  }
  ExtendedState out;
  out.u = analyze_scalar(fu_rows, s.u.basis, s.u.length, s.u.modes());
  out.w = analyze_scalar(fw_rows, s.w.basis, s.w.length, s.w.modes());
  out.theta_t = analyze_scalar(ft_rows, theta.basis, theta.length, theta.modes());
  return out;
}

void require_three_parts(const ExtendedState& s, Basis u, Basis w, Basis theta) {
  if (!s.theta_t) throw domain_error("state needs the theta_t part");
  require_scalar(s.u, "gradient nonlinearity");
  require_same_size(s.u, s.w);
  require_same_size(s.u, *s.theta_t);
  if (s.u.basis != u || s.w.basis != w || s.theta_t->basis != theta) throw domain_error("state parts have the wrong bases");
}

ExtendedState general_forcing(const ExtendedState& s, const EllipticConfig& cfg, const GradientNonlinearity& nl) {
  require_three_parts(s, Basis::DirichletSine, Basis::DirichletSine, Basis::DirichletSine);
  Field y = solve_elliptic(s.w - cfg.shift * s.u, cfg, nl).y;
  Field tangent = solve_elliptic_tangent(y, *s.theta_t - cfg.shift * s.w, cfg, nl);
  return three_part_forcing(s, derivative(y), derivative(tangent), nl);
}

ExtendedState rred_forcing(const ExtendedState& s, const GradientNonlinearity& nl) {
  require_three_parts(s, Basis::DirichletSine, Basis::NeumannCosine, Basis::DirichletSine);
  return three_part_forcing(s, s.w, *s.theta_t, nl);
}

ExtendedState fnd_forcing(const ExtendedState& s, const GradientNonlinearity& nl) {
  require_scalar(s.u, "gradient nonlinearity");
  require_same_size(s.u, s.w);
  if (s.u.basis != Basis::NeumannCosine || s.w.basis != Basis::DirichletSine) {
    throw domain_error("state parts have the wrong bases");
  }
  const int M = default_intervals(s.u.modes());
  Eigen::VectorXd U = synthesize(s.u, M).col(0), W = synthesize(s.w, M).col(0);
  Eigen::VectorXd Wx = synthesize(derivative(s.w), M).col(0);
  Eigen::VectorXd fu_rows(M + 1), fw_rows(M + 1);
  for (int j = 0; j <= M; ++j) {
    fu_rows(j) = -nl.f(U(j), W(j));
    fw_rows(j) = -(nl.fu(U(j), W(j)) * W(j) + nl.fp(U(j), W(j)) * Wx(j));
  }
  return {analyze_scalar(fu_rows, s.u.basis, s.u.length, s.u.modes()),
          analyze_scalar(fw_rows, s.w.basis, s.w.length, s.w.modes()), std::nullopt};
}

}  // namespace

ExtendedState general_system_rhs(const ExtendedState& s, const EllipticConfig& cfg, const GradientNonlinearity& nl) {
  return linear_part(s) + general_forcing(s, cfg, nl);
}

ModalSystem general_system(const ExtendedState& like, const EllipticConfig& cfg, const GradientNonlinearity& nl) {
  cfg.validate();
  return state_system(like, [cfg, nl](const ExtendedState& s) { return general_forcing(s, cfg, nl); });
}

ExtendedState general_embed(const Field& u, const GradientNonlinearity& nl) {
  if (u.basis != Basis::DirichletSine) throw domain_error("general_embed takes a sine-basis field");
  Field w = gradient_rhs(u, nl);
  return {u, w, gradient_rhs_tangent(u, w, nl)};
}

void require_zero_at_zero_state(const GradientNonlinearity& nl) {
  double worst = max_at_zero_state(nl);
  if (worst > 1e-14) {
    throw config_error("f(0, p) does not vanish (max " + std::to_string(worst) +
                       "); use the general route with the elliptic lift");
  }
}

ExtendedState rred_rhs(const ExtendedState& s, const GradientNonlinearity& nl) {
  require_zero_at_zero_state(nl);
  return linear_part(s) + rred_forcing(s, nl);
}

ModalSystem rred_system(const ExtendedState& like, const GradientNonlinearity& nl) {
  require_zero_at_zero_state(nl);
  return state_system(like, [nl](const ExtendedState& s) { return rred_forcing(s, nl); });
}

ExtendedState rred_embed(const Field& u) {
  if (u.basis != Basis::DirichletSine) throw domain_error("rred_embed takes a sine-basis field");
  return {u, derivative_same_size(u), second_derivative(u)};
}

ExtendedState fnd_rhs(const ExtendedState& s, const GradientNonlinearity& nl) {
  return linear_part(s) + fnd_forcing(s, nl);
}

ModalSystem fnd_system(const ExtendedState& like, const GradientNonlinearity& nl) {
  return state_system(like, [nl](const ExtendedState& s) { return fnd_forcing(s, nl); });
}

ExtendedState to_transformed(const ExtendedState& s, int K, const Nonlinearity& nl) {
  Kernel kernel = solve_a_of_u(s.u, K, nl);
  return {s.u, multiply(pointwise_inverse(kernel.a), s.w), std::nullopt};
}

ExtendedState from_transformed(const ExtendedState& t, int K, const Nonlinearity& nl) {
  Kernel kernel = solve_a_of_u(t.u, K, nl);
  return {t.u, multiply(kernel.a, t.w), std::nullopt};
}

NeumannTerms neumann_terms(const ExtendedState& t, const NeumannProblem& problem) {
  const Nonlinearity& nl = problem.nl;
  require_same_size(t.u, t.w);
  if (t.u.basis != Basis::NeumannCosine || t.w.basis != Basis::DirichletSine) {
    throw domain_error("the transformed Neumann system needs cosine u and sine v");
  }
  const int m = t.u.components();
  if (2 * m > kMaxComponents) throw domain_error("too many components for the joint cut-off");
  NeumannTerms out;
  out.kernel = solve_a_of_u(t.u, problem.K, nl);
  const MatrixField& a = out.kernel.a;
  const int M = a.intervals;
  Eigen::MatrixXd U = synthesize(t.u, M), V = synthesize(t.w, M), Vx = synthesize(derivative(t.w), M);
  Eigen::MatrixXd Px = synthesize(derivative(out.kernel.projected), M);

  std::vector<Vec> w_nodes(M + 1), u_rows(M + 1);
  for (int j = 0; j <= M; ++j) {
    w_nodes[j] = a.value[j] * row_vec(V, j);
    Vec u = row_vec(U, j);
    u_rows[j] = -(nl.f(u) * w_nodes[j] + nl.g(u));
  }
  out.u_forcing = analyze_rows(u_rows, t.u.basis, t.u.length, t.u.modes());
  Field dt_u_low = project_low(damped_laplacian(t.u) + out.u_forcing, problem.K);
  MatrixField dt_a = time_derivative_a(out.kernel, dt_u_low, nl);

  RadialCutoff joint{problem.joint_radius};
  std::vector<Vec> transport(M + 1), source(M + 1);
  Vec z(2 * m);
  for (int j = 0; j <= M; ++j) {
    Vec p = row_vec(out.kernel.projected_fine, 2 * j);
    Vec u = row_vec(U, j);
    const Vec& w = w_nodes[j];
    Mat fp = nl.f(p);
    Mat fu = nl.f(u);
    Mat a_xx = 0.5 * fp * a.slope[j] + 0.5 * nl.df(p, row_vec(Px, j)) * a.value[j];
    Eigen::PartialPivLU<Mat> lu(a.value[j]);
    transport[j] = lu.solve(Mat((fp - fu) * a.value[j])) * row_vec(Vx, j);
    z << u, w;
    double chi = joint.value(z);
    Vec quadratic = chi == 0.0 ? Vec(Vec::Zero(m)) : Vec(chi * (nl.df(u, w) * w));
    Vec rhs = (a_xx - fu * a.slope[j] - dt_a.value[j]) * row_vec(V, j) - quadratic - nl.dg(u) * w;
    source[j] = lu.solve(rhs);
  }
  out.F1_dxv = analyze_rows(transport, t.w.basis, t.w.length, t.w.modes());
  out.F2 = analyze_rows(source, t.w.basis, t.w.length, t.w.modes());
  return out;
}

ExtendedState neumann_forcing(const ExtendedState& t, const NeumannProblem& problem) {
  double phi = problem.cutoff.value(norm_h1_squared(t.u) + norm_h1_squared(t.w));
  if (phi == 0.0) return {zeros_like(t.u), zeros_like(t.w), std::nullopt};
  NeumannTerms terms = neumann_terms(t, problem);
  return {phi * terms.u_forcing, phi * (terms.F1_dxv + terms.F2), std::nullopt};
}

ModalSystem neumann_transformed_system(const ExtendedState& like, const NeumannProblem& problem) {
  problem.cutoff.validate();
  return state_system(like, [problem](const ExtendedState& t) { return neumann_forcing(t, problem); });
}

double neumann_level(int k, double length) {
  const double q = std::numbers::pi * k / length;
  return 1.0 + q * q;
}

PerronProblem neumann_perron_problem(const ExtendedState& like, const NeumannProblem& problem, int n) {
  const int N = like.u.modes();
  if (n < 1 || n >= N) throw config_error("n must lie in [1, modes)");
  PerronProblem p;
  p.decay = extended_h1_weights(like);
  p.norm_weight = p.decay;
  const int m = like.u.components();
  const int offset = static_cast<int>(like.u.coeffs.size());
  for (int c = 0; c < m; ++c) {
    for (int i = 0; i < n; ++i) p.low.push_back(c * N + i);
  }
  for (int c = 0; c < m; ++c) {
    for (int i = 0; i + 1 < n; ++i) p.low.push_back(offset + c * N + i);
  }
  p.forcing = neumann_transformed_system(like, problem).forcing;
  return p;
}

PerronConfig neumann_perron_config(int n, double length, double tolerance, double dt) {
  if (n < 1) throw config_error("n must be at least 1");
  PerronConfig c = make_perron_config_levels(neumann_level(n - 1, length), neumann_level(n, length), tolerance, dt);
  c.n = n;
  c.length = length;
  return c;
}

GapReport neumann_gap_check(int n, double length, double L1, double L2) {
  if (n < 1) throw domain_error("n must be at least 1");
  if (L1 < 0.0 || L2 < 0.0) throw domain_error("Lipschitz constants must be non-negative");
  GapReport r;
  r.n = n;
  r.L1 = L1;
  r.L2 = L2;
  r.gap = neumann_level(n, length) - neumann_level(n - 1, length);
  r.sqrt_lambda_next = std::sqrt(neumann_level(n, length));
  r.transport_ok = r.gap / r.sqrt_lambda_next > 4.0 * L1;
  r.source_ok = r.gap > 4.0 * L2;
  r.budget = 2.0 * r.sqrt_lambda_next * L1 / r.gap + 2.0 * L2 / r.gap;
  r.pass = r.transport_ok && r.source_ok;
  return r;
}

LipschitzReport measure_neumann_lipschitz(const NeumannProblem& problem, const std::vector<NeumannPair>& pairs) {
  auto terms = [&](const ExtendedState& t) {
    double phi = problem.cutoff.value(norm_h1_squared(t.u) + norm_h1_squared(t.w));
    ExtendedState zero{zeros_like(t.u), zeros_like(t.w), std::nullopt};
    if (phi == 0.0) return std::pair<Field, ExtendedState>{zero.w, zero};
    NeumannTerms nt = neumann_terms(t, problem);
    return std::pair<Field, ExtendedState>{phi * nt.F1_dxv, ExtendedState{phi * nt.u_forcing, phi * nt.F2, std::nullopt}};
  };
  LipschitzReport report;
  report.K = problem.K;
  for (size_t i = 0; i < pairs.size(); ++i) {
    double d = norm_h1(pairs[i].first - pairs[i].second);
    if (d == 0.0) continue;
    auto a = terms(pairs[i].first);
    auto b = terms(pairs[i].second);
    double r1 = norm_l2(a.first - b.first) / d;
    double r2 = norm_h1(a.second - b.second) / d;
    if (!std::isfinite(r1) || !std::isfinite(r2)) throw numerical_error("non-finite Lipschitz ratio");
    ++report.samples;
    if (r1 > report.L1 || report.argmax_L1 < 0) {
      report.L1 = r1;
      report.argmax_L1 = static_cast<int>(i);
    }
    if (r2 > report.L2 || report.argmax_L2 < 0) {
      report.L2 = r2;
      report.argmax_L2 = static_cast<int>(i);
    }
  }
  return report;
}

std::vector<NeumannPair> neumann_pairs(const ExtendedState& like, double radius, int count, Rng& rng) {
  const double part = radius / std::sqrt(2.0);
  std::vector<SamplePair> pu = lipschitz_pairs(shape_of(like.u), part, count, rng);
  std::vector<SamplePair> pv = lipschitz_pairs(shape_of(like.w), part, count, rng);
  std::vector<NeumannPair> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.push_back({{pu[i].first, pv[i].first, std::nullopt}, {pu[i].second, pv[i].second, std::nullopt}});
  }
  return out;
}

EmbeddingAudit embedding_audit(const std::vector<Field>& samples) {
  EmbeddingAudit audit;
  std::vector<ExtendedState> embedded;
  embedded.reserve(samples.size());
  for (const auto& u : samples) embedded.push_back(embed(u));
  for (size_t i = 0; i < samples.size(); ++i) {
    for (size_t j = i + 1; j < samples.size(); ++j) {
      double d = norm_h1(samples[i] - samples[j]);
      if (d == 0.0) continue;
      double r = norm_h1(embedded[i] - embedded[j]) / d;
      if (audit.pairs == 0) audit.min_ratio = audit.max_ratio = r;
      audit.min_ratio = std::min(audit.min_ratio, r);
      audit.max_ratio = std::max(audit.max_ratio, r);
      ++audit.pairs;
    }
  }
  return audit;
}

}  // namespace imlab
