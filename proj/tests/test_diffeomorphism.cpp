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
#include "imlab/diffeomorphism.hpp"
#include "imlab/error.hpp"
#include "imlab/sampling.hpp"

using namespace imlab;

namespace {
const double kPi = std::numbers::pi;

// Taylor series with scaling and squaring.
Mat expm(const Mat& A) {
  int squarings = std::max(0, static_cast<int>(std::ceil(std::log2(A.norm() + 1e-300))) + 4);
  Mat B = A / std::pow(2.0, squarings);
  Mat term = Mat::Identity(A.rows(), A.cols());
  Mat sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * B / k;
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

// Direct sine summation of the first K modes of u at x.
double low_modes_at(const Field& u, int K, double x) {
  double s = 0.0;
  for (int i = 0; i < K; ++i) s += u.coeffs(i, 0) * std::sqrt(2.0 / u.length) * std::sin((i + 1) * kPi * x / u.length);
  return s;
}
}  // namespace

TEST_CASE("constant coefficient gives the matrix exponential") {
  Mat A(2, 2);
  A << 0.3, -1.1, 0.7, -0.2;
  Nonlinearity nl = constant_matrix(A, 1.0);
  auto error_at = [&](int N) {
    Field zero = Field::zeros(Basis::DirichletSine, kPi, N, 2);
    Kernel kernel = solve_a_of_u(zero, 8, nl);
    double err = 0.0;
    for (int j = 0; j <= kernel.a.intervals; ++j) {
      double x = j * kPi / kernel.a.intervals;
      Mat exact = expm(0.5 * A * x);
      err = std::max(err, (kernel.a.value[j] - exact).norm());
      err = std::max(err, (kernel.a.slope[j] - 0.5 * A * exact).norm());
    }
    return err;
  };
  double coarse = error_at(32), fine = error_at(64);
  CHECK(fine <= 1e-8);
  // Fourth-order convergence in the grid spacing.
  CHECK(coarse / fine == doctest::Approx(16.0).epsilon(0.15));
}

TEST_CASE("scalar kernel matches quadrature of the exponent") {
  const int K = 12;
  Rng rng(5);
  Field u64 = random_smooth_field({Basis::DirichletSine, kPi, 64, 1}, 1.5, 4.0, rng);
  Nonlinearity nl = burgers_cutoff(0.8, 0.0, 2.0);
  auto error_at = [&](int N) {
    Field u = resized(u64, N);
    Kernel kernel = solve_a_of_u(u, K, nl);
    // Composite Simpson on a fine grid, accumulated node by node.
    const int M = kernel.a.intervals;
    const int sub = 64;
    const double h = kPi / (M * sub);
    double exponent = 0.0, err = 0.0;
    auto half_f = [&](double x) {
      Vec p(1);
      p(0) = low_modes_at(u, K, x);
      return 0.5 * nl.f(p)(0, 0);
    };
    for (int j = 0; j < M; ++j) {
      for (int s = 0; s < sub; s += 2) {
        double x0 = (j * sub + s) * h;
        exponent += h / 3.0 * (half_f(x0) + 4.0 * half_f(x0 + h) + half_f(x0 + 2 * h));
      }
      err = std::max(err, std::abs(kernel.a.value[j + 1](0, 0) - std::exp(exponent)));
    }
    CHECK(kernel.a.value[0](0, 0) == 1.0);
    return err;
  };
  double coarse = error_at(64), fine = error_at(128);
  CHECK(fine <= 1e-9);
  CHECK(coarse / fine == doctest::Approx(16.0).epsilon(0.25));
}

TEST_CASE("forward and inverse maps round-trip") {
  const int N = 128, K = 16;
  Nonlinearity nl = coupled_2d(0.9, 0.4, 2.0);
  Rng rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Field v = random_smooth_field({Basis::DirichletSine, kPi, N, 2}, 1.0, 3.0, rng);
    Field u = forward_map_U(v, K, nl);
    Field back = inverse_map_V(u, K, nl);
    worst = std::max(worst, norm_h1(back - v) / norm_h1(v));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("adjoint inverse agrees with pointwise inverse") {
  Nonlinearity nl = coupled_2d(1.2, 0.0, 2.0);
  Rng rng(3);
  Field v = random_smooth_field({Basis::DirichletSine, kPi, 64, 2}, 1.5, 4.0, rng);
  Kernel kernel = solve_a_of_v(v, 16, nl);
  InverseCheck check = inverse_matrix(kernel);
  CHECK(check.disagreement <= 1e-8);
  for (int j = 0; j <= kernel.a.intervals; ++j) {
    CHECK((kernel.a.value[j] * check.inverse.value[j] - Mat::Identity(2, 2)).norm() <= 1e-12);
  }
}

TEST_CASE("quasi-newton and picard reach the same fixed point") {
  Nonlinearity nl = coupled_2d(1.0, 0.3, 2.0);
  Rng rng(8);
  Field v = random_smooth_field({Basis::DirichletSine, kPi, 64, 2}, 1.2, 4.0, rng);
  FixedPointOptions picard;
  picard.method = FixedPointMethod::Picard;
  picard.max_iterations = 400;
  Kernel a = solve_a_of_v(v, 16, nl, picard);
  Kernel b = solve_a_of_v(v, 16, nl);
  CHECK(w1inf_distance(a.a, b.a) <= 1e-9);
  CHECK(b.report.iterations <= a.report.iterations);
  // The fixed point satisfies its own defining equation.
  Field u = multiply(b.a, v);
  Kernel c = solve_a_of_u(u, 16, nl);
  CHECK(w1inf_distance(c.a, b.a) <= 1e-9);
}

TEST_CASE("kernel norm stays bounded as K grows") {
  Nonlinearity nl = coupled_2d(1.0, 0.0, 2.0);
  Rng rng(21);
  Field v = random_smooth_field({Basis::DirichletSine, kPi, 256, 2}, 1.5, 8.0, rng);
  double lo = 1e300, hi = 0.0;
  for (int K : {8, 16, 32, 64, 128}) {
    Kernel kernel = solve_a_of_v(v, K, nl);
    lo = std::min(lo, kernel.a.w1inf());
    hi = std::max(hi, kernel.a.w1inf());
    CHECK(kernel.a.min_abs_det() > 1e-3);
  }
  CHECK(hi / lo <= 1.2);
}

TEST_CASE("uniqueness threshold is found and the iteration contracts above it") {
  Nonlinearity nl = coupled_2d(1.0, 0.0, 2.0);
  K0Estimate est = estimate_K0(1.0, nl, {Basis::DirichletSine, kPi, 128, 2}, 17);
  CHECK(est.K0 >= 4);
  CHECK(est.K0 <= 128);
  CHECK(est.contraction.back() < 0.9);
  Rng rng(4);
  Field v = random_smooth_field({Basis::DirichletSine, kPi, 128, 2}, 1.0, 6.0, rng);
  Kernel kernel = solve_a_of_v(v, est.K0, nl);
  CHECK(kernel.report.residuals.back() <= 1e-10);
}

TEST_CASE("non-convergence is reported as a numerical error") {
  Nonlinearity nl = coupled_2d(1.0, 0.0, 2.0);
  Rng rng(4);
  Field v = random_smooth_field({Basis::DirichletSine, kPi, 64, 2}, 1.0, 6.0, rng);
  FixedPointOptions tight;
  tight.max_iterations = 1;
  CHECK_THROWS_AS(solve_a_of_v(v, 16, nl, tight), Error);
  CHECK_THROWS_AS(solve_a_of_v(v, 0, nl), Error);
}

TEST_CASE("kernel is lipschitz in v") {
  Nonlinearity nl = coupled_2d(1.0, 0.2, 2.0);
  Rng rng(31);
  const FieldShape shape{Basis::DirichletSine, kPi, 64, 2};
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    Field v1 = random_smooth_field(shape, 1.0, 4.0, rng);
    Field dv = random_smooth_field(shape, 1e-3, 4.0, rng);
    double ratio = lipschitz_probe_a(v1, v1 + dv, 16, nl);
    CHECK(std::isfinite(ratio));
    worst = std::max(worst, ratio);
  }
  CHECK(worst > 0.0);
  CHECK(worst < 50.0);
  CHECK(lipschitz_probe_a(random_smooth_field(shape, 1.0, 4.0, rng), Field::zeros(Basis::DirichletSine, kPi, 64, 2), 16, nl) >= 0.0);
}
