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

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "imlab/error.hpp"
#include "imlab/transformed.hpp"

using namespace imlab;

namespace {
const double kPi = std::numbers::pi;

TransformedProblem problem_for(const Nonlinearity& nl, int K, double inner = 5.0, double outer = 10.0) {
  TransformedProblem p;
  p.nl = nl;
  p.K = K;
  p.cutoff.inner = inner;
  p.cutoff.outer = outer;
  return p;
}
}  // namespace

TEST_CASE("cut-off profile") {
  CutoffSpec c{1.0, 2.0};
  CHECK(c.value(0.5) == 1.0);
  CHECK(c.value(1.0) == 1.0);
  CHECK(c.value(4.0) == 0.0);
  CHECK(c.value(9.0) == 0.0);
  double worst = 0.0, prev = 1.0;
  for (int i = 0; i <= 3000; ++i) {
    double z = 1.0 + 3.0 * i / 3000.0;
    double v = c.value(z);
    CHECK(v <= prev + 1e-15);
    prev = v;
    double h = 1e-6;
    worst = std::max(worst, std::abs(c.value(z + h) - c.value(z - h)) / (2 * h));
  }
  CHECK(worst == doctest::Approx(c.lipschitz()).epsilon(1e-6));
  CHECK_THROWS_AS((CutoffSpec{2.0, 1.0}).validate(), Error);
}

TEST_CASE("zero advection reduces to the reaction term") {
  Rng rng(1);
  Field v = random_smooth_field({Basis::DirichletSine, kPi, 64, 1}, 1.0, 4.0, rng);
  TransformedTerms zero = transformed_terms(v, 8, zero_nonlinearity(1));
  CHECK(zero.F1_dxv.coeffs.isZero());
  CHECK(zero.F2.coeffs.isZero());
  Nonlinearity reaction = burgers_cutoff(0.0, 0.7, 2.0);
  TransformedTerms t = transformed_terms(v, 8, reaction);
  CHECK(t.F1_dxv.coeffs.cwiseAbs().maxCoeff() == 0.0);
  for (int j = 0; j <= t.kernel.a.intervals; ++j) {
    CHECK(t.dt_a.value[j].norm() == 0.0);
    CHECK(std::abs(t.kernel.a.value[j](0, 0) - 1.0) == 0.0);
  }
  Eigen::MatrixXd nodes = synthesize(v);
  Eigen::MatrixXd minus_g(nodes.rows(), 1);
  for (Eigen::Index j = 0; j < nodes.rows(); ++j) minus_g(j, 0) = -reaction.g(nodes.row(j).transpose())(0);
  Field expected = analyze(minus_g, Basis::DirichletSine, kPi, 64);
  CHECK((t.F2 - expected).coeffs.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("time derivative of the kernel vanishes at an equilibrium") {
  Field zero = Field::zeros(Basis::DirichletSine, kPi, 32, 2);
  TransformedTerms t = transformed_terms(zero, 8, coupled_2d(1.0, 0.0, 2.0));
  for (const Mat& b : t.dt_a.value) CHECK(b.norm() == 0.0);
  CHECK(t.F1_dxv.coeffs.isZero());
  CHECK(t.F2.coeffs.isZero());
}

TEST_CASE("time derivative of the kernel matches differences along a trajectory") {
  const int N = 64, K = 8;
  Nonlinearity nl = coupled_2d(1.0, 0.5, 3.0);
  Rng rng(9);
  Field u0 = random_smooth_field({Basis::DirichletSine, kPi, N, 2}, 1.5, 4.0, rng);
  Field v0 = inverse_map_V(u0, K, nl);
  TransformedTerms t = transformed_terms(v0, K, nl);
  Kernel a0 = solve_a_of_u(u0, K, nl);
  auto error_for = [&](double h) {
    Trajectory traj = evolve(u0, h, 1e-6, nl);
    Kernel a1 = solve_a_of_u(traj.states.back(), K, nl);
    double err = 0.0;
    for (int j = 0; j <= a0.a.intervals; ++j) {
      Mat fd = (a1.a.value[j] - a0.a.value[j]) / h;
      err = std::max(err, (fd - t.dt_a.value[j]).norm());
    }
    return err;
  };
  double e1 = error_for(1e-3), e2 = error_for(5e-4);
  double scale = 0.0;
  for (const Mat& b : t.dt_a.value) scale = std::max(scale, b.norm());
  CHECK(scale > 1e-2);
  // Forward differences: the O(h) error is a few percent at h = 1e-3.
  CHECK(e1 <= 5e-2 * scale);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("source term keeps homogeneous boundary values") {
  Rng rng(12);
  for (const Nonlinearity& nl : {burgers_cutoff(1.0, 0.5, 2.0), coupled_2d(1.0, 0.8, 2.0)}) {
    Field v = random_smooth_field({Basis::DirichletSine, kPi, 64, nl.components}, 1.5, 4.0, rng);
    TransformedTerms t = transformed_terms(v, 16, nl);
    CHECK(t.F2_boundary <= 1e-10);
  }
}

TEST_CASE("cut-off switches between heat flow and the full right-hand side") {
  Nonlinearity nl = burgers_cutoff(1.0, 0.3, 2.0);
  TransformedProblem p = problem_for(nl, 16, 1.0, 2.0);
  Rng rng(2);
  Field big = random_smooth_field({Basis::DirichletSine, kPi, 64, 1}, 2.5, 4.0, rng);
  CHECK((transformed_rhs(big, p) - second_derivative(big)).coeffs.isZero());
  Field small = random_smooth_field({Basis::DirichletSine, kPi, 64, 1}, 0.9, 4.0, rng);
  TransformedTerms t = transformed_terms(small, 16, nl);
  Field full = second_derivative(small) + t.F1_dxv + t.F2;
  CHECK((transformed_rhs(small, p) - full).coeffs.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("transformed right-hand side is the pushforward of the original one") {
  const int N = 64, K = 16;
  Nonlinearity nl = coupled_2d(1.0, 0.6, 3.0);
  TransformedProblem p = problem_for(nl, K);
  Rng rng(6);
  Field u0 = random_smooth_field({Basis::DirichletSine, kPi, N, 2}, 1.5, 4.0, rng);
  Field v0 = inverse_map_V(u0, K, nl);
  Field rhs = transformed_rhs(v0, p);
  auto error_for = [&](double h) {
    Field u1 = evolve(u0, h, 1e-6, nl).states.back();
    Field fd = (1.0 / h) * (inverse_map_V(u1, K, nl) - v0);
    return norm_l2(fd - rhs) / norm_l2(rhs);
  };
  double e1 = error_for(1e-3), e2 = error_for(5e-4);
  CHECK(e1 <= 1e-1);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("lipschitz measurement of the identity") {
  Rng rng(4);
  auto pairs = lipschitz_pairs({Basis::DirichletSine, kPi, 32, 2}, 1.0, 60, rng);
  auto h1 = [](const Field& f) { return norm_h1(f); };
  LipschitzEstimate est = measure_lipschitz([](const Field& v) { return v; }, h1, h1, pairs, 4);
  CHECK(est.samples == 60);
  CHECK(est.constant == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("transport coefficient shrinks like K^(-1/2)") {
  const int N = 512;
  Nonlinearity nl = burgers_cutoff(1.0, 0.0, 2.0);
  Rng rng(14);
  const FieldShape shape{Basis::DirichletSine, kPi, N, 1};
  std::vector<Field> samples;
  for (int i = 0; i < 10; ++i) samples.push_back(kink_field(shape, uniform(rng, 0.2, 0.8) * kPi, 1.0, rng));
  for (int i = 0; i < 10; ++i) {
    double width = kPi * std::pow(2.0, -(3 + i % 6));
    samples.push_back(localized_bump(shape, 0.5 * kPi, width, 1.0, rng));
  }
  auto sup_over = [&](int K) {
    double s = 0.0;
    for (const Field& v : samples) s = std::max(s, sup_F1(v, K, nl));
    return s;
  };
  double ratio = sup_over(16) / sup_over(64);
  CHECK(ratio >= 1.7);
  CHECK(ratio <= 2.6);
}

TEST_CASE("transformed lipschitz constants are finite and the transport one decays") {
  const int N = 128;
  Nonlinearity nl = burgers_cutoff(1.0, 0.4, 2.0);
  Rng rng(7);
  auto pairs = lipschitz_pairs({Basis::DirichletSine, kPi, N, 1}, 1.0, 60, rng);
  LipschitzReport lo = measure_transformed_lipschitz(problem_for(nl, 8, 1.0, 1.5), pairs);
  LipschitzReport hi = measure_transformed_lipschitz(problem_for(nl, 32, 1.0, 1.5), pairs);
  CHECK(lo.samples == 60);
  CHECK(std::isfinite(lo.L2));
  CHECK(lo.L2 > 0.0);
  CHECK(hi.L1 < lo.L1);
}

TEST_CASE("original and transformed flows agree") {
  const int N = 64;
  Rng rng(10);
  Field u0 = random_smooth_field({Basis::DirichletSine, kPi, N, 1}, 1.0, 4.0, rng);
  EquivalenceReport heat = equivalence_check(u0, problem_for(zero_nonlinearity(1), 8), 1.0, 1e-3, 50);
  CHECK(heat.max_deviation <= 1e-12);
  TransformedProblem p = problem_for(burgers_cutoff(1.0, 0.0, 2.0), 16);
  EquivalenceReport coarse = equivalence_check(u0, p, 1.0, 2e-3, 50);
  EquivalenceReport fine = equivalence_check(u0, p, 1.0, 1e-3, 100);
  MESSAGE("deviation " << coarse.max_deviation << " -> " << fine.max_deviation);
  CHECK(fine.max_deviation <= 1e-4);
  CHECK(coarse.max_deviation / fine.max_deviation == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("loglog slope") {
  CHECK(loglog_slope({1, 2, 4, 8}, {1, 0.5, 0.25, 0.125}) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(loglog_slope({1, 2}, {1, -1}), Error);
}
