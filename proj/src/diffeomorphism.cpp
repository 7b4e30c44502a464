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

#include "imlab/diffeomorphism.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "imlab/error.hpp"

namespace imlab {

namespace {

Vec row_vec(const Eigen::MatrixXd& values, int j) { return values.row(j).transpose(); }

// Cubic Hermite value at the midpoint of an interval of length h.
Mat hermite_mid(const Mat& y0, const Mat& d0, const Mat& y1, const Mat& d1, double h) {
  return 0.5 * (y0 + y1) + (h / 8.0) * (d0 - d1);
}

int intervals_of(const std::vector<Mat>& coefficient) {
  if (coefficient.size() < 5 || coefficient.size() % 2 == 0) {
    throw domain_error("coefficient must be sampled on a half-step grid with at least two intervals");
  }
  return static_cast<int>(coefficient.size() - 1) / 2;
}

std::vector<Mat> half_coefficient(const Eigen::MatrixXd& fine, const Nonlinearity& nl) {
  std::vector<Mat> out(fine.rows());
  for (Eigen::Index i = 0; i < fine.rows(); ++i) out[i] = 0.5 * nl.f(row_vec(fine, static_cast<int>(i)));
  return out;
}

void check_invertible(const MatrixField& a) {
  if (a.min_abs_det() < 1e-8) throw numerical_error("matrix kernel lost invertibility (|det a| < 1e-8)");
}

}  // namespace

MatrixField MatrixField::identity(double length, int intervals, int m) {
  MatrixField a;
  a.length = length;
  a.intervals = intervals;
  a.value.assign(intervals + 1, Mat::Identity(m, m));
  a.slope.assign(intervals + 1, Mat::Zero(m, m));
  return a;
}

double MatrixField::w1inf() const {
  double v = 0.0, s = 0.0;
  for (size_t j = 0; j < value.size(); ++j) {
    v = std::max(v, value[j].norm());
    s = std::max(s, slope[j].norm());
  }
  return v + s;
}

double MatrixField::min_abs_det() const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& a : value) d = std::min(d, std::abs(a.determinant()));
  return d;
}

double w1inf_distance(const MatrixField& a, const MatrixField& b) {
  if (a.value.size() != b.value.size()) throw domain_error("matrix fields on different grids");
  double v = 0.0, s = 0.0;
  for (size_t j = 0; j < a.value.size(); ++j) {
    v = std::max(v, (a.value[j] - b.value[j]).norm());
    s = std::max(s, (a.slope[j] - b.slope[j]).norm());
  }
  return v + s;
}

MatrixField integrate_linear(const std::vector<Mat>& A, double length) {
  const int M = intervals_of(A);
  const int m = static_cast<int>(A.front().rows());
  const double h = length / M;
  MatrixField a = MatrixField::identity(length, M, m);
  Mat y = Mat::Identity(m, m);
  for (int j = 0; j < M; ++j) {
    const Mat& A0 = A[2 * j];
    const Mat& Am = A[2 * j + 1];
    const Mat& A1 = A[2 * j + 2];
    Mat k1 = A0 * y;
    Mat k2 = Am * (y + 0.5 * h * k1);
    Mat k3 = Am * (y + 0.5 * h * k2);
    Mat k4 = A1 * (y + h * k3);
    a.slope[j] = k1;
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    a.value[j + 1] = y;
  }
  a.slope[M] = A[2 * M] * y;
  return a;
}

MatrixField integrate_adjoint(const std::vector<Mat>& A, double length) {
  std::vector<Mat> minus_t(A.size());
  for (size_t i = 0; i < A.size(); ++i) minus_t[i] = -A[i].transpose();
  return integrate_linear(minus_t, length);
}

MatrixField pointwise_inverse(const MatrixField& a) {
  MatrixField inv = a;
  for (size_t j = 0; j < a.value.size(); ++j) {
    Mat ai = a.value[j].inverse();
    inv.value[j] = ai;
    inv.slope[j] = -ai * a.slope[j] * ai;
  }
  return inv;
}

MatrixField transpose(const MatrixField& a) {
  MatrixField t = a;
  for (size_t j = 0; j < a.value.size(); ++j) {
    t.value[j] = a.value[j].transpose();
    t.slope[j] = a.slope[j].transpose();
  }
  return t;
}

Field multiply(const MatrixField& a, const Field& v) {
  const int M = a.intervals;
  if (M != default_intervals(v.modes())) throw domain_error("matrix field and field use different grids");
  Eigen::MatrixXd values = synthesize(v, M);
  Eigen::MatrixXd out(M + 1, v.components());
  for (int j = 0; j <= M; ++j) out.row(j) = (a.value[j] * row_vec(values, j)).transpose();
  return analyze(out, v.basis, v.length, v.modes());
}

Kernel solve_a_of_u(const Field& u, int K, const Nonlinearity& nl) {
  if (u.components() != nl.components) throw domain_error("nonlinearity and field component counts differ");
  const int M = default_intervals(u.modes());
  Kernel kernel;
  kernel.K = K;
  kernel.projected = project_low(u, K);
  kernel.projected_fine = synthesize(kernel.projected, 2 * M);
  kernel.coefficient = half_coefficient(kernel.projected_fine, nl);
  kernel.a = integrate_linear(kernel.coefficient, u.length);
  kernel.report.iterations = 1;
  check_invertible(kernel.a);
  return kernel;
}

namespace {

// Local correction y' = A y + f'(p)[(r + y) v] G / 2, y(0) = 0, where r = G - a is the Picard
// residual. This is the linearization of the fixed-point equation with P_K replaced by Id.
MatrixField local_correction(const MatrixField& a, const MatrixField& G, const std::vector<Mat>& A,
                             const Eigen::MatrixXd& p_fine, const Eigen::MatrixXd& v_fine,
                             const Nonlinearity& nl) {
  const int M = a.intervals;
  const int m = a.components();
  const double h = a.length / M;
  MatrixField y = MatrixField::identity(a.length, M, m);
  auto rhs = [&](int i, const Mat& e, const Mat& r, const Mat& g) -> Mat {
    Vec p = row_vec(p_fine, i);
    Vec v = row_vec(v_fine, i);
    Vec direction = (r + e) * v;
    return A[i] * e + 0.5 * nl.df(p, direction) * g;
  };
  Mat e = Mat::Zero(m, m);
  for (int j = 0; j < M; ++j) {
    Mat r0 = G.value[j] - a.value[j];
    Mat r1 = G.value[j + 1] - a.value[j + 1];
    Mat rm = hermite_mid(G.value[j], G.slope[j], G.value[j + 1], G.slope[j + 1], h) -
             hermite_mid(a.value[j], a.slope[j], a.value[j + 1], a.slope[j + 1], h);
    Mat gm = hermite_mid(G.value[j], G.slope[j], G.value[j + 1], G.slope[j + 1], h);
    Mat k1 = rhs(2 * j, e, r0, G.value[j]);
    Mat k2 = rhs(2 * j + 1, e + 0.5 * h * k1, rm, gm);
    Mat k3 = rhs(2 * j + 1, e + 0.5 * h * k2, rm, gm);
    Mat k4 = rhs(2 * j + 2, e + h * k3, r1, G.value[j + 1]);
    y.value[j] = e;
    y.slope[j] = k1;
    e += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  y.value[M] = e;
  y.slope[M] = rhs(2 * M, e, G.value[M] - a.value[M], G.value[M]);
  return y;
}

double contraction_of(const std::vector<double>& residuals) {
  double worst = 0.0;
  for (size_t j = 0; j + 1 < residuals.size(); ++j) {
    if (residuals[j] > 1e-9) worst = std::max(worst, residuals[j + 1] / residuals[j]);
  }
  return worst;
}

}  // namespace

Kernel solve_a_of_v(const Field& v, int K, const Nonlinearity& nl, const FixedPointOptions& options) {
  if (v.basis != Basis::DirichletSine) throw domain_error("solve_a_of_v expects a sine-basis field");
  if (v.components() != nl.components) throw domain_error("nonlinearity and field component counts differ");
  if (K < 1 || K > v.modes()) throw domain_error("projection index out of range");
  const int M = default_intervals(v.modes());
  const int m = v.components();
  Eigen::MatrixXd v_nodes = synthesize(v, M);
  Eigen::MatrixXd v_fine;
  if (options.method == FixedPointMethod::QuasiNewton) v_fine = synthesize(v, 2 * M);

  MatrixField a = MatrixField::identity(v.length, M, m);
  FixedPointReport report;
  for (int it = 1; it <= options.max_iterations; ++it) {
    Eigen::MatrixXd product(M + 1, m);
    for (int j = 0; j <= M; ++j) product.row(j) = (a.value[j] * row_vec(v_nodes, j)).transpose();
    Kernel kernel;
    kernel.K = K;
    kernel.projected = project_low(analyze(product, v.basis, v.length, v.modes()), K);
    kernel.projected_fine = synthesize(kernel.projected, 2 * M);
    kernel.coefficient = half_coefficient(kernel.projected_fine, nl);
    MatrixField G = integrate_linear(kernel.coefficient, v.length);
    double r = w1inf_distance(G, a);
    report.residuals.push_back(r);
    report.iterations = it;
    if (!std::isfinite(r) || r > 1e8) break;
    if (r <= options.tolerance) {
      report.contraction = contraction_of(report.residuals);
      kernel.a = std::move(G);
      kernel.report = report;
      check_invertible(kernel.a);
      return kernel;
    }
    if (options.method == FixedPointMethod::Picard) {
      a = std::move(G);
    } else {
      MatrixField y = local_correction(a, G, kernel.coefficient, kernel.projected_fine, v_fine, nl);
      for (int j = 0; j <= M; ++j) {
        a.value[j] = G.value[j] + y.value[j];
        a.slope[j] = G.slope[j] + y.slope[j];
      }
    }
  }
  throw numerical_error("fixed point for a(v) did not converge in " + std::to_string(report.iterations) +
                        " iterations at K = " + std::to_string(K) + " (K below the uniqueness threshold?)");
}

InverseCheck inverse_matrix(const Kernel& kernel) {
  InverseCheck check;
  check.inverse = pointwise_inverse(kernel.a);
  check.adjoint_inverse = transpose(integrate_adjoint(kernel.coefficient, kernel.a.length));
  check.disagreement = w1inf_distance(check.inverse, check.adjoint_inverse);
  if (check.disagreement > 1e-6) {
    throw consistency_error("adjoint and pointwise inverses disagree by " + std::to_string(check.disagreement));
  }
  return check;
}

Field forward_map_U(const Field& v, int K, const Nonlinearity& nl, const FixedPointOptions& options) {
  Kernel kernel = solve_a_of_v(v, K, nl, options);
  return multiply(kernel.a, v);
}

Field inverse_map_V(const Field& u, int K, const Nonlinearity& nl) {
  if (u.basis != Basis::DirichletSine) throw domain_error("inverse_map_V expects a sine-basis field");
  Kernel kernel = solve_a_of_u(u, K, nl);
  return multiply(pointwise_inverse(kernel.a), u);
}

K0Estimate estimate_K0(const std::vector<Field>& probes, const Nonlinearity& nl) {
  if (probes.empty()) throw domain_error("estimate_K0 needs probe fields");
  K0Estimate est;
  const int modes = probes.front().modes();
  for (int K = 4; K <= 512 && K <= modes; K *= 2) {
    double worst = 0.0;
    bool ok = true;
    for (const Field& v : probes) {
      try {
        Kernel kernel = solve_a_of_v(v, K, nl);
        worst = std::max(worst, kernel.report.contraction);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Numerical) throw;
        ok = false;
        worst = std::numeric_limits<double>::infinity();
        break;
      }
    }
    est.tested.push_back(K);
    est.contraction.push_back(worst);
    if (ok && worst < 0.9) {
      est.K0 = K;
      return est;
    }
  }
  throw numerical_error("no K <= 512 gives a contracting fixed point; raise the number of modes");
}

K0Estimate estimate_K0(double r, const Nonlinearity& nl, const FieldShape& shape, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Field> probes;
  for (int i = 0; i < 10; ++i) probes.push_back(random_smooth_field(shape, r, 6.0, rng));
  return estimate_K0(probes, nl);
}

double lipschitz_probe_a(const Field& v1, const Field& v2, int K, const Nonlinearity& nl) {
  double d = norm_h1(v1 - v2);
  if (d == 0.0) return 0.0;
  Kernel a1 = solve_a_of_v(v1, K, nl);
  Kernel a2 = solve_a_of_v(v2, K, nl);
  return w1inf_distance(a1.a, a2.a) / d;
}

}  // namespace imlab
