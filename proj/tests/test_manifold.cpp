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

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "imlab/error.hpp"
#include "imlab/manifold.hpp"

using namespace imlab;

namespace {
const double kPi = std::numbers::pi;

Eigen::VectorXd squares(int count) {
  Eigen::VectorXd d(count);
  for (int k = 1; k <= count; ++k) d(k - 1) = double(k) * k;
  return d;
}

// Linear Galerkin system dx/dt = -diag(k^2) x + eps B x on the first 'modes' sine modes of (0, pi).
PerronProblem linear_problem(const Eigen::MatrixXd& B, int n) {
  PerronProblem p;
  const int d = static_cast<int>(B.rows());
  p.decay = squares(d);
  p.norm_weight = (1.0 + p.decay.array()).matrix();
  for (int i = 0; i < n; ++i) p.low.push_back(i);
  p.forcing = [B](const Eigen::VectorXd& x) -> Eigen::VectorXd { return B * x; };
  return p;
}

// Graph of the invariant subspace of the n largest eigenvalues of -diag(k^2) + B.
Eigen::MatrixXd subspace_graph(const Eigen::MatrixXd& B, int n) {
  const int d = static_cast<int>(B.rows());
  Eigen::MatrixXd A = B;
  A.diagonal() -= squares(d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  Eigen::MatrixXd E = eig.eigenvectors().rightCols(n);  // ascending order
  return E.bottomRows(d - n) * E.topRows(n).inverse();
}

Eigen::MatrixXd symmetric_coupling(int d, double eps, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd B(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) B(i, j) = B(j, i) = eps * uniform(rng, -1.0, 1.0);
  return B;
}
}  // namespace

TEST_CASE("gap check arithmetic") {
  GapReport r = spectral_gap_check(5, kPi, 0.1, 1.0);
  CHECK(r.gap == 11.0);
  CHECK(r.sqrt_lambda_next == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(r.transport_ok);
  CHECK(r.source_ok);
  CHECK(r.budget == doctest::Approx(2.0 * 6.0 * 0.1 / 11.0 + 2.0 / 11.0).epsilon(1e-14));
  for (int n = 1; n < 50; ++n) {
    GapReport z = spectral_gap_check(n, 2.0, 0.0, 0.0);
    CHECK(z.pass);
    CHECK(z.budget == 0.0);
  }
  CHECK_FALSE(spectral_gap_check(3, kPi, 0.0, 1e6).pass);
}

TEST_CASE("perron configuration") {
  for (int n : {1, 3, 7}) {
    PerronConfig c = make_perron_config(n, 16, kPi, 1e-9);
    double lo = double(n) * n, hi = double(n + 1) * (n + 1);
    CHECK(c.theta > lo);
    CHECK(c.theta < hi);
    CHECK(std::exp(-(hi - c.theta) * c.horizon) <= 1e-9);
    CHECK(c.steps() * c.dt == doctest::Approx(c.horizon));
  }
}

TEST_CASE("resolvent against closed-form solutions") {
  const double dt = 2e-4;
  Eigen::VectorXd decay(2);
  decay << 1.0, 9.0;
  const double theta = 5.0;
  const int J = static_cast<int>(std::round(6.0 / dt));
  const double T = J * dt;
  Resolvent R(decay, theta, dt, J);
  const double mu = 1.5;
  Eigen::MatrixXd h(2, J + 1);
  for (int j = 0; j <= J; ++j) h.col(j).setConstant(std::exp(mu * R.time(j)));
  Eigen::MatrixXd y = R.apply(h);
  double err = 0.0;
  for (int j = 0; j <= J; ++j) {
    double t = R.time(j);
    double slow = -(std::exp(-decay(0) * t) - std::exp(mu * t)) / (decay(0) + mu);
    double fast = (std::exp(mu * t) - std::exp(-decay(1) * (t + T) - mu * T)) / (decay(1) + mu);
    // The slow row grows like e^{-t}, so compare relative to the solution size.
    err = std::max({err, std::abs(y(0, j) - slow) / std::max(1.0, std::abs(slow)), std::abs(y(1, j) - fast)});
  }
  CHECK(err <= 1e-8);
  CHECK(R.apply(Eigen::MatrixXd::Zero(2, J + 1)).isZero());

  // Exact for forcing linear in time.
  Resolvent coarse(decay, theta, 0.05, 40);
  Eigen::MatrixXd lin(2, 41);
  for (int j = 0; j <= 40; ++j) lin.col(j).setConstant(0.3 + 0.7 * coarse.time(j));
  Eigen::MatrixXd yl = coarse.apply(lin);
  double worst = 0.0;
  // A 64 times finer grid of the same linear forcing must land on the same values.
  Resolvent fine(decay, theta, 0.05 / 64, 40 * 64);
  Eigen::MatrixXd linf(2, 40 * 64 + 1);
  for (int j = 0; j <= 40 * 64; ++j) linf.col(j).setConstant(0.3 + 0.7 * fine.time(j));
  Eigen::MatrixXd yf = fine.apply(linf);
  for (int j = 0; j <= 40; ++j) worst = std::max(worst, (yl.col(j) - yf.col(64 * j)).cwiseAbs().maxCoeff());
  CHECK(worst <= 1e-13);
}

TEST_CASE("resolvent transpose satisfies the pairing identity") {
  Eigen::VectorXd decay = squares(6);
  Resolvent R(decay, 6.5, 0.01, 300);
  Rng rng(3);
  Eigen::MatrixXd h(6, 301), g(6, 301);
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    h.data()[i] = standard_normal(rng);
    g.data()[i] = standard_normal(rng);
  }
  double lhs = (R.apply(h).array() * g.array()).sum();
  double rhs = (h.array() * R.apply_transpose(g).array()).sum();
  CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
}

TEST_CASE("discrete resolvent norms respect the continuous bounds") {
  for (int n : {3, 5, 8}) {
    PerronConfig c = make_perron_config(n, 16, kPi, 1e-9);
    Resolvent R(squares(2 * n + 4), c.theta, c.dt, c.steps());
    ResolventNorms norms = resolvent_norms(R, n);
    CHECK(norms.phi_to_phi <= 1.05 * norms.phi_bound);
    CHECK(norms.l2_to_phi <= 1.05 * norms.l2_bound);
    CHECK(norms.phi_to_phi >= 0.9 * norms.phi_bound);
  }
}

TEST_CASE("perron map with zero forcing") {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(6, 6);
  PerronProblem p = linear_problem(B, 2);
  PerronConfig c = make_perron_config(2, 4, kPi);
  Resolvent R(p.decay, c.theta, c.dt, c.steps());
  Eigen::VectorXd base(2);
  base << 0.3, -0.2;
  PerronResult r = perron_solve(base, p, R, 1e-12, 10);
  CHECK(r.iterations == 1);
  CHECK(r.image.isZero());
}

TEST_CASE("perron graph matches the dense invariant subspace") {
  const int d = 6, n = 2;
  Eigen::MatrixXd B = symmetric_coupling(d, 0.4, 5);
  CHECK(B.norm() > 0.1);
  PerronProblem p = linear_problem(B, n);
  PerronConfig c = make_perron_config(n, 4, kPi, 1e-12, 1e-5);
  Resolvent R(p.decay, c.theta, c.dt, c.steps());
  Eigen::MatrixXd graph = subspace_graph(B, n);
  Rng rng(8);
  double worst = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    Eigen::VectorXd base(n);
    base << uniform(rng, -1, 1), uniform(rng, -1, 1);
    PerronResult r = perron_solve(base, p, R, 1e-12, 100);
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(d);
    expected.tail(d - n) = graph * base;
    worst = std::max(worst, p.norm(r.image - expected));
    GapReport gap = spectral_gap_check(n, kPi, 0.0, B.operatorNorm());
    CHECK(r.max_contraction <= gap.budget + 0.05);
  }
  MESSAGE("linear oracle deviation " << worst);
  CHECK(worst <= 1e-8);
}

TEST_CASE("linear manifold is invariant") {
  const int d = 6, n = 1;
  Eigen::MatrixXd B = symmetric_coupling(d, 0.3, 2);
  PerronProblem p = linear_problem(B, n);
  PerronConfig c = make_perron_config(n, 4, kPi, 1e-12, 1e-4);
  Resolvent R(p.decay, c.theta, c.dt, c.steps());
  BuildReport report;
  ManifoldGraph graph = build_manifold(grid_bases(n, 1.0, 5), p, R, 1e-12, 100, &report);
  CHECK(graph.size() == 5);
  InvarianceReport inv = invariance_residual(graph, p, 1e-3);
  CHECK(inv.max_relative <= 1e-6);
  CHECK(inv.outside == 0);
}

TEST_CASE("graph interpolation") {
  ManifoldGraph empty(1, 3);
  CHECK_THROWS_AS(empty.evaluate(Eigen::VectorXd::Zero(1)), Error);
  auto image = [](double s) {
    Eigen::VectorXd v(3);
    v << 0.0, std::sin(s), 0.5 * s * s;
    return v;
  };
  auto midpoint_error = [&](int points) {
    ManifoldGraph g(1, 3);
    for (const auto& b : grid_bases(1, 1.0, points)) g.add(b, image(b(0)));
    double err = 0.0;
    for (int i = 0; i + 1 < points; ++i) {
      Eigen::VectorXd q(1);
      q(0) = -1.0 + (2.0 * i + 1.0) / (points - 1);
      err = std::max(err, (g.evaluate(q) - image(q(0))).norm());
    }
    return err;
  };
  double e21 = midpoint_error(21), e41 = midpoint_error(41);
  CHECK(e41 < e21);
  CHECK(e21 / e41 == doctest::Approx(4.0).epsilon(0.2));
  ManifoldGraph lin(2, 2);
  for (const auto& b : grid_bases(2, 1.0, 3)) lin.add(b, Eigen::Vector2d(2 * b(0) - b(1), b(1)));
  bool outside = true;
  Eigen::VectorXd q = Eigen::Vector2d(0.3, -0.7);
  CHECK((lin.evaluate(q, &outside) - Eigen::Vector2d(1.3, -0.7)).norm() <= 1e-13);
  CHECK_FALSE(outside);
  lin.evaluate(Eigen::Vector2d(5.0, 5.0), &outside);
  CHECK(outside);
}

TEST_CASE("tracking fit") {
  std::vector<double> t, d;
  for (int i = 0; i <= 200; ++i) {
    t.push_back(0.05 * i);
    d.push_back(std::max(1e-12, 0.3 * std::exp(-2.5 * t.back())));
  }
  TrackingFit fit = fit_tracking(t, d, 1e-12);
  CHECK_FALSE(fit.degenerate);
  CHECK(fit.rate == doctest::Approx(2.5).epsilon(1e-9));
  CHECK(fit_tracking(t, std::vector<double>(t.size(), 1e-12), 1e-12).degenerate);
}

TEST_CASE("transformed desk problem") {
  const FieldShape shape{Basis::DirichletSine, kPi, 32, 1};
  TransformedProblem tp;
  tp.nl = burgers_cutoff(1.0, 0.0, 1.0);
  tp.K = 8;
  tp.cutoff = {0.15, 0.3};
  PerronProblem p = transformed_perron_problem(shape, tp, 1);
  PerronConfig c = make_perron_config(1, 8, kPi);
  Resolvent R(p.decay, c.theta, c.dt, c.steps());
  PerronResult zero = perron_solve(Eigen::VectorXd::Zero(1), p, R, 1e-9, 50);
  CHECK(zero.image.isZero());
  std::vector<Eigen::VectorXd> probes = grid_bases(1, 0.1, 5);
  std::vector<Eigen::VectorXd> images;
  for (const auto& b : probes) {
    PerronResult r = perron_solve(b, p, R, 1e-9, 50);
    CHECK(r.max_contraction < 0.5);
    images.push_back(r.image);
  }
  for (size_t i = 0; i < probes.size(); ++i)
    for (size_t j = i + 1; j < probes.size(); ++j) {
      double ratio = p.norm(images[i] - images[j]) / p.norm(p.embed(probes[i] - probes[j]));
      CHECK(ratio < 1.0);
    }
}

TEST_CASE("parameter choice without nonlinearity") {
  const FieldShape shape{Basis::DirichletSine, kPi, 32, 1};
  Rng rng(1);
  auto pairs = lipschitz_pairs(shape, 1.0, 10, rng);
  ParameterChoice ch = choose_parameters(zero_nonlinearity(1), shape, {1.0, 2.0}, pairs);
  CHECK(ch.K == 4);
  CHECK(ch.n == 1);
  CHECK(ch.gap.budget == 0.0);
}
