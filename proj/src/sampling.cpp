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

#include "imlab/sampling.hpp"

#include <cmath>
#include <numbers>

#include "imlab/error.hpp"

namespace imlab {

FieldShape shape_of(const Field& v) { return {v.basis, v.length, v.modes(), v.components()}; }

double standard_normal(Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(rng);
}

double uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

Field with_h1_norm(const Field& v, double h1_norm) {
  double n = norm_h1(v);
  if (n == 0.0) return v;
  return (h1_norm / n) * v;
}

Field random_smooth_field(const FieldShape& shape, double h1_norm, double bandwidth, Rng& rng) {
  Field v = shape.zeros();
  for (int c = 0; c < shape.components; ++c) {
    for (int i = 0; i < shape.modes; ++i) {
      int k = v.wavenumber(i);
      v.coeffs(i, c) = standard_normal(rng) * std::exp(-k / bandwidth);
    }
  }
  return with_h1_norm(v, h1_norm);
}

Field localized_bump(const FieldShape& shape, double center, double width, double h1_norm, Rng& rng) {
  const int intervals = default_intervals(shape.modes);
  Grid grid = make_grid(shape.length, intervals);
  Eigen::VectorXd direction(shape.components);
  for (int c = 0; c < shape.components; ++c) direction(c) = standard_normal(rng);
  direction.normalize();
  const double sigma = width / 4.0;
  Eigen::MatrixXd values(intervals + 1, shape.components);
  for (int j = 0; j <= intervals; ++j) {
    double d = (grid.x(j) - center) / sigma;
    values.row(j) = std::exp(-0.5 * d * d) * direction.transpose();
  }
  if (shape.basis == Basis::DirichletSine) {
    values.row(0).setZero();
    values.row(intervals).setZero();
  }
  return with_h1_norm(analyze(values, shape.basis, shape.length, shape.modes), h1_norm);
}

Field power_law_field(const FieldShape& shape, double exponent, double h1_norm, Rng& rng) {
  Field v = shape.zeros();
  for (int c = 0; c < shape.components; ++c) {
    for (int i = 0; i < shape.modes; ++i) {
      int k = std::max(v.wavenumber(i), 1);
      double sign = standard_normal(rng) < 0.0 ? -1.0 : 1.0;
      v.coeffs(i, c) = sign * std::pow(static_cast<double>(k), -exponent);
    }
  }
  return with_h1_norm(v, h1_norm);
}

Field kink_field(const FieldShape& shape, double center, double h1_norm, Rng& rng) {
  Field v = shape.zeros();
  Eigen::VectorXd direction(shape.components);
  for (int c = 0; c < shape.components; ++c) direction(c) = standard_normal(rng);
  direction.normalize();
  const double L = shape.length;
  for (int i = 0; i < shape.modes; ++i) {
    int k = v.wavenumber(i);
    double arg = k * std::numbers::pi * center / L;
    double mode = shape.basis == Basis::DirichletSine ? std::sqrt(2.0 / L) * std::sin(arg)
                  : k == 0                           ? std::sqrt(1.0 / L)
                                                     : std::sqrt(2.0 / L) * std::cos(arg);
    v.coeffs.row(i) = (mode / (1.0 + v.eigenvalue_at(i))) * direction.transpose();
  }
  return with_h1_norm(v, h1_norm);
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw domain_error("slope fit needs at least two points");
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double den = n * sxx - sx * sx;
  if (den == 0.0) throw domain_error("degenerate slope fit");
  return (n * sxy - sx * sy) / den;
}

double tail_exponent(const Field& v, int k_lo, int k_hi) {
  std::vector<double> lx, ly;
  for (int i = 0; i < v.modes(); ++i) {
    int k = v.wavenumber(i);
    if (k < k_lo || k > k_hi || k == 0) continue;
    double a = v.coeffs.row(i).norm();
    if (a <= 0.0) continue;
    lx.push_back(std::log(static_cast<double>(k)));
    ly.push_back(std::log(a));
  }
  return fit_slope(lx, ly);
}

}  // namespace imlab
