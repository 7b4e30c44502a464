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
#include "imlab/sampling.hpp"
#include "imlab/spectral.hpp"

using namespace imlab;

namespace {

const double kPi = std::numbers::pi;

// Direct summation of the sine/cosine series at arbitrary points.
double direct_value(const Field& v, int c, double x) {
  double s = 0.0;
  for (int i = 0; i < v.modes(); ++i) {
    int k = v.wavenumber(i);
    double arg = k * kPi * x / v.length;
    if (v.basis == Basis::DirichletSine) {
      s += v.coeffs(i, c) * std::sqrt(2.0 / v.length) * std::sin(arg);
    } else {
      double norm = k == 0 ? std::sqrt(1.0 / v.length) : std::sqrt(2.0 / v.length);
      s += v.coeffs(i, c) * norm * std::cos(arg);
    }
  }
  return s;
}

double direct_slope(const Field& v, int c, double x) {
  double s = 0.0;
  for (int i = 0; i < v.modes(); ++i) {
    int k = v.wavenumber(i);
    double w = k * kPi / v.length;
    if (v.basis == Basis::DirichletSine) s += v.coeffs(i, c) * std::sqrt(2.0 / v.length) * w * std::cos(w * x);
  }
  return s;
}

// Trapezoid projection by explicit loops.
Field direct_analyze(const Eigen::MatrixXd& values, Basis basis, double L, int modes) {
  Field f = Field::zeros(basis, L, modes, static_cast<int>(values.cols()));
  const int M = static_cast<int>(values.rows()) - 1;
  const double h = L / M;
  for (int c = 0; c < f.components(); ++c) {
    for (int i = 0; i < modes; ++i) {
      Field unit = Field::zeros(basis, L, modes, 1);
      unit.coeffs(i, 0) = 1.0;
      double s = 0.0;
      for (int j = 0; j <= M; ++j) {
        double w = (j == 0 || j == M) ? 0.5 * h : h;
        s += w * values(j, c) * direct_value(unit, 0, j * h);
      }
      f.coeffs(i, c) = s;
    }
  }
  return f;
}

}  // namespace

TEST_CASE("eigenvalues follow (pi k / L)^2") {
  CHECK(eigenvalue(3, kPi, Basis::DirichletSine) == doctest::Approx(9.0).epsilon(1e-15));
  CHECK(eigenvalue(1, kPi, Basis::DirichletSine) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(eigenvalue(0, 2.0, Basis::NeumannCosine) == 0.0);
  CHECK_THROWS_AS(eigenvalue(0, kPi, Basis::DirichletSine), Error);
  CHECK_THROWS_AS(eigenvalue(-1, kPi, Basis::NeumannCosine), Error);
  CHECK_THROWS_AS(eigenvalue(1, 0.0, Basis::DirichletSine), Error);
}

TEST_CASE("gap ratio equals pi / L for every n") {
  CHECK(gap_ratio(1, kPi) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gap_ratio(100, kPi) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gap_ratio(4, 2.0 * kPi) == doctest::Approx(0.5).epsilon(1e-14));
  for (double L : {kPi, 2.0 * kPi, 1.0}) {
    double worst = 0.0;
    for (int n = 1; n <= 10000; ++n) worst = std::max(worst, std::abs(gap_ratio(n, L) / (kPi / L) - 1.0));
    CHECK(worst <= 1e-14);
  }
}

TEST_CASE("gap difference equals (pi / L)^2 (2n + 1)") {
  CHECK(gap_difference(5, kPi) == doctest::Approx(11.0).epsilon(1e-14));
  CHECK(gap_difference(1, kPi) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(gap_difference(10, 1.0) == doctest::Approx(21.0 * kPi * kPi).epsilon(1e-14));
  CHECK_THROWS_AS(gap_difference(0, kPi), Error);
}

TEST_CASE("projectors split a field") {
  Field v = Field::zeros(Basis::DirichletSine, kPi, 6, 1);
  v.coeffs.setOnes();
  Field low = project_low(v, 2);
  CHECK(low.coeffs(0, 0) == 1.0);
  CHECK(low.coeffs(1, 0) == 1.0);
  CHECK(low.coeffs.bottomRows(4).isZero());
  CHECK_THROWS_AS(project_low(v, 0), Error);
  CHECK_THROWS_AS(project_low(v, 7), Error);

  Rng rng(11);
  FieldShape shape{Basis::DirichletSine, kPi, 64, 2};
  for (int trial = 0; trial < 20; ++trial) {
    Field w = random_smooth_field(shape, 1.0, 20.0, rng);
    int K = 1 + trial * 3;
    Field p = project_low(w, K);
    Field q = project_high(w, K);
    CHECK((p + q - w).coeffs.cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((project_low(p, K) - p).coeffs.cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(project_low(q, K).coeffs.cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("high-mode remainder is small in L-infinity like K^{-1/2}") {
  // Cauchy-Schwarz chain: |Q_K v|_inf <= sqrt(2/L) sum_{k>K} |c_k|
  //   <= sqrt(2/L) |v|_{H^1} sqrt(sum_{k>K} 1 / (1 + lambda_k)) <= sqrt(2L) / pi * K^{-1/2} |v|_{H^1}.
  const double L = kPi;
  const double bound_constant = std::sqrt(2.0 * L) / kPi;
  Rng rng(5);
  FieldShape shape{Basis::DirichletSine, L, 256, 1};
  double fitted = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Field v = trial % 2 == 0 ? power_law_field(shape, 1.6, 1.0, rng)
                             : localized_bump(shape, uniform(rng, 0.3, 2.8), uniform(rng, 0.05, 0.5), 1.0, rng);
    for (int K : {4, 8, 16, 32, 64, 128}) {
      double ratio = norm_linf(project_high(v, K)) * std::sqrt(static_cast<double>(K));
      fitted = std::max(fitted, ratio);
    }
  }
  CHECK(fitted > 0.0);
  CHECK(fitted <= bound_constant);
}

TEST_CASE("synthesis matches the basis definition and direct summation") {
  const double L = kPi;
  Field e1 = Field::zeros(Basis::DirichletSine, L, 8, 1);
  e1.coeffs(0, 0) = 1.0;
  Eigen::MatrixXd values = synthesize(e1);
  Grid grid = make_grid(L, default_intervals(8));
  for (int j = 0; j <= grid.intervals; ++j) {
    CHECK(values(j, 0) == doctest::Approx(std::sqrt(2.0 / L) * std::sin(grid.x(j))).epsilon(1e-13));
  }
  Field zero = Field::zeros(Basis::NeumannCosine, L, 8, 2);
  CHECK(synthesize(zero).isZero());

  Rng rng(3);
  for (Basis basis : {Basis::DirichletSine, Basis::NeumannCosine}) {
    FieldShape shape{basis, 2.5, 32, 2};
    Field v = random_smooth_field(shape, 1.0, 40.0, rng);
    Eigen::MatrixXd fast = synthesize(v);
    Grid g = make_grid(shape.length, default_intervals(32));
    double err = 0.0;
    for (int c = 0; c < 2; ++c)
      for (int j = 0; j <= g.intervals; ++j) err = std::max(err, std::abs(fast(j, c) - direct_value(v, c, g.x(j))));
    CHECK(err <= 1e-12);
    Field back = analyze(fast, basis, shape.length, 32);
    Field back_direct = direct_analyze(fast, basis, shape.length, 32);
    CHECK((back - v).coeffs.cwiseAbs().maxCoeff() <= 1e-12 * v.coeffs.cwiseAbs().maxCoeff());
    CHECK((back_direct - v).coeffs.cwiseAbs().maxCoeff() <= 1e-12 * v.coeffs.cwiseAbs().maxCoeff());
  }
  CHECK_THROWS_AS(synthesize(Field::zeros(Basis::DirichletSine, L, 16, 1), 8), Error);
  CHECK_THROWS_AS(analyze(Eigen::MatrixXd::Zero(9, 1), Basis::DirichletSine, L, 16), Error);
}

TEST_CASE("quadrature integrates eigenfunction products exactly") {
  const int N = 16;
  const double L = 1.7;
  Grid grid = make_grid(L, default_intervals(N));
  for (Basis basis : {Basis::DirichletSine, Basis::NeumannCosine}) {
    int first = basis == Basis::DirichletSine ? 1 : 0;
    double worst = 0.0;
    for (int a = first; a < 2 * N; ++a) {
      for (int b = first; b < 2 * N; ++b) {
        auto e = [&](int k, double x) {
          if (basis == Basis::DirichletSine) return std::sqrt(2.0 / L) * std::sin(k * kPi * x / L);
          return (k == 0 ? std::sqrt(1.0 / L) : std::sqrt(2.0 / L)) * std::cos(k * kPi * x / L);
        };
        double s = 0.0;
        for (int j = 0; j <= grid.intervals; ++j) s += grid.weights(j) * e(a, grid.x(j)) * e(b, grid.x(j));
        worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
      }
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("norms") {
  Field e1 = Field::zeros(Basis::DirichletSine, kPi, 16, 1);
  e1.coeffs(0, 0) = 1.0;
  Norms n = norms(e1);
  CHECK(n.l2 == doctest::Approx(1.0));
  CHECK(n.h1 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(n.linf == doctest::Approx(std::sqrt(2.0 / kPi)).epsilon(1e-6));
  Norms z = norms(Field::zeros(Basis::DirichletSine, kPi, 16, 1));
  CHECK(z.l2 == 0.0);
  CHECK(z.h1 == 0.0);
  CHECK(z.linf == 0.0);

  Rng rng(8);
  FieldShape shape{Basis::DirichletSine, kPi, 64, 2};
  for (int trial = 0; trial < 20; ++trial) {
    Field v = random_smooth_field(shape, 1.0, 10.0, rng);
    double four = norm_linf(v, 4);
    double eight = norm_linf(v, 8);
    CHECK(std::abs(four - eight) <= 0.01 * eight);
  }
}

TEST_CASE("Parseval on the collocation grid") {
  Rng rng(21);
  for (Basis basis : {Basis::DirichletSine, Basis::NeumannCosine}) {
    FieldShape shape{basis, kPi, 128, 1};
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      Field v = random_smooth_field(shape, 1.0, 50.0, rng);
      Eigen::MatrixXd values = synthesize(v);
      Grid grid = make_grid(kPi, default_intervals(128));
      double discrete = 0.0;
      for (int j = 0; j <= grid.intervals; ++j) discrete += grid.weights(j) * values(j, 0) * values(j, 0);
      worst = std::max(worst, std::abs(std::sqrt(discrete) / norm_l2(v) - 1.0));
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("spectral derivative maps sines to cosines") {
  Rng rng(4);
  for (int N : {16, 128, 512}) {
    FieldShape shape{Basis::DirichletSine, 2.0, N, 1};
    Field v = random_smooth_field(shape, 1.0, N / 4.0, rng);
    Field d = derivative(v);
    CHECK(d.basis == Basis::NeumannCosine);
    CHECK(d.modes() == N + 1);
    Eigen::MatrixXd values = synthesize(d, default_intervals(N));
    Grid grid = make_grid(2.0, default_intervals(N));
    double scale = 0.0, err = 0.0;
    for (int j = 0; j <= grid.intervals; j += 7) {
      double exact = direct_slope(v, 0, grid.x(j));
      scale = std::max(scale, std::abs(exact));
      err = std::max(err, std::abs(values(j, 0) - exact));
    }
    CHECK(err <= 1e-10 * std::max(scale, 1.0));
  }
  // Cosine to sine: d/dx cos(pi x / L) = -(pi / L) sin(pi x / L).
  Field c = Field::zeros(Basis::NeumannCosine, kPi, 8, 1);
  c.coeffs(1, 0) = 1.0;
  Field s = derivative(c);
  CHECK(s.basis == Basis::DirichletSine);
  CHECK(s.coeffs(0, 0) == doctest::Approx(-1.0));
  CHECK(second_derivative(c).coeffs(1, 0) == doctest::Approx(-1.0));
}
