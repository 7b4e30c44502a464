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
#include <string>

namespace imlab {

constexpr int kMaxComponents = 6;

// Small fixed-capacity vectors and matrices for pointwise nonlinearity evaluation.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxComponents, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxComponents, kMaxComponents>;

// Quintic smoothstep q(s) = 6s^5 - 15s^4 + 10s^3 on [0, 1], clamped outside.
double smoothstep(double s);
double smoothstep_slope(double s);
double smoothstep_curvature(double s);
// max |q'| on [0, 1].
constexpr double kSmoothstepMaxSlope = 15.0 / 8.0;

// Radial profile chi(s): 1 for s <= 1/4, 0 for s >= 1, reversed smoothstep between.
// Applied as chi(|u|^2 / radius^2), so the plateau is |u| <= radius / 2.
struct RadialCutoff {
  double radius = 1.0;
  double value(const Vec& u) const;
  Vec gradient(const Vec& u) const;
  Mat hessian(const Vec& u) const;
};

// Pair (f, g) of the advection matrix f: R^m -> R^{m x m} and the reaction g: R^m -> R^m.
// df(u, a) is the directional derivative of f at u along a; d2f(u, a, b) the second one.
struct Nonlinearity {
  std::string name;
  int components = 1;
  std::function<Mat(const Vec&)> f;
  std::function<Mat(const Vec&, const Vec&)> df;
  std::function<Mat(const Vec&, const Vec&, const Vec&)> d2f;
  std::function<Vec(const Vec&)> g;
  std::function<Mat(const Vec&)> dg;
  double support_radius = 0.0;
  bool g_zero_at_origin = true;
};

// Smooth parts before truncation; same calling conventions as Nonlinearity.
struct RawNonlinearity {
  std::string name;
  int components = 1;
  std::function<Mat(const Vec&)> f;
  std::function<Mat(const Vec&, const Vec&)> df;
  std::function<Mat(const Vec&, const Vec&, const Vec&)> d2f;
  std::function<Vec(const Vec&)> g;
  std::function<Mat(const Vec&)> dg;
};

Nonlinearity make_cutoff_nonlinearity(const RawNonlinearity& raw, double radius);

Nonlinearity zero_nonlinearity(int components);
// m = 1: f(u) = strength * u, g(u) = -reaction * u, both truncated at 'radius'.
Nonlinearity burgers_cutoff(double strength, double reaction = 0.0, double radius = 1.0);
// m = 2: f(u) = strength * [[u1, u2], [-u2, u1]], g(u) = rotation * [[0, -1], [1, 0]] u.
Nonlinearity coupled_2d(double strength, double rotation = 0.0, double radius = 1.0);
// f(u) = A on the plateau |u| <= radius / 2, g = 0.
Nonlinearity constant_matrix(const Mat& A, double radius = 1.0);
// f -> s f, g -> s g.
Nonlinearity scaled(const Nonlinearity& nl, double s);

struct NonlinearityAudit {
  double df_error = 0.0;   // max relative deviation from central differences
  double d2f_error = 0.0;
  double dg_error = 0.0;
  double support_leak = 0.0;  // max |f|, |g| sampled outside the support
};

NonlinearityAudit audit_nonlinearity(const Nonlinearity& nl, int samples, std::uint64_t seed);

// Scalar f(u, p) with p standing for du/dx, and its partial derivatives.
struct GradientNonlinearity {
  std::string name;
  std::function<double(double, double)> f, fu, fp, fuu, fup, fpp;
  double support_radius = 0.0;
};

// chi((u^2 + p^2) / radius^2) * (c0 + cu u + cp p + cuu u^2 + cup u p + cpp p^2).
struct QuadraticCoefficients {
  double c0 = 0.0, cu = 0.0, cp = 0.0, cuu = 0.0, cup = 0.0, cpp = 0.0;
};
GradientNonlinearity gradient_nonlinearity(const QuadraticCoefficients& c, double radius);
GradientNonlinearity zero_gradient_nonlinearity();

// sup |f_u| and sup |f_p| by dense sampling of the support box.
struct GradientBounds {
  double fu = 0.0;
  double fp = 0.0;
};
GradientBounds gradient_bounds(const GradientNonlinearity& nl, int samples_per_axis = 201);
// max |f(0, p)| over sampled p.
double max_at_zero_state(const GradientNonlinearity& nl, int samples = 401);

}  // namespace imlab
