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

#include "imlab/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "imlab/error.hpp"

namespace imlab {

double smoothstep(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double smoothstep_slope(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  double t = s * (1.0 - s);
  return 30.0 * t * t;
}

double smoothstep_curvature(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
}

namespace {

// chi(s) = 1 - q((s - 1/4) / (3/4)).
double profile(double s) { return 1.0 - smoothstep((s - 0.25) / 0.75); }
double profile_slope(double s) { return -smoothstep_slope((s - 0.25) / 0.75) / 0.75; }
double profile_curvature(double s) { return -smoothstep_curvature((s - 0.25) / 0.75) / (0.75 * 0.75); }

}  // namespace

double RadialCutoff::value(const Vec& u) const { return profile(u.squaredNorm() / (radius * radius)); }

Vec RadialCutoff::gradient(const Vec& u) const {
  double r2 = radius * radius;
  return (profile_slope(u.squaredNorm() / r2) * 2.0 / r2) * u;
}

Mat RadialCutoff::hessian(const Vec& u) const {
  double r2 = radius * radius;
  double s = u.squaredNorm() / r2;
  Mat h = (profile_curvature(s) * 4.0 / (r2 * r2)) * (u * u.transpose());
  h.diagonal().array() += profile_slope(s) * 2.0 / r2;
  return h;
}

Nonlinearity make_cutoff_nonlinearity(const RawNonlinearity& raw, double radius) {
  if (!(radius > 0.0)) throw domain_error("cut-off radius must be positive");
  RadialCutoff chi{radius};
  Nonlinearity nl;
  nl.name = raw.name;
  nl.components = raw.components;
  nl.support_radius = radius;
  nl.f = [raw, chi](const Vec& u) -> Mat {
    double c = chi.value(u);
    if (c == 0.0) return Mat::Zero(u.size(), u.size());
    return c * raw.f(u);
  };
  nl.df = [raw, chi](const Vec& u, const Vec& a) -> Mat {
    double c = chi.value(u);
    if (c == 0.0) return Mat::Zero(u.size(), u.size());
    Mat out = c * raw.df(u, a);
    double ca = chi.gradient(u).dot(a);
    if (ca != 0.0) out += ca * raw.f(u);
    return out;
  };
  nl.d2f = [raw, chi](const Vec& u, const Vec& a, const Vec& b) -> Mat {
    double c = chi.value(u);
    if (c == 0.0) return Mat::Zero(u.size(), u.size());
    Vec grad = chi.gradient(u);
    double ca = grad.dot(a);
    double cb = grad.dot(b);
    double cab = a.dot(chi.hessian(u) * b);
    Mat out = c * raw.d2f(u, a, b);
    if (ca != 0.0) out += ca * raw.df(u, b);
    if (cb != 0.0) out += cb * raw.df(u, a);
    if (cab != 0.0) out += cab * raw.f(u);
    return out;
  };
  nl.g = [raw, chi](const Vec& u) -> Vec {
    double c = chi.value(u);
    if (c == 0.0) return Vec::Zero(u.size());
    return c * raw.g(u);
  };
  nl.dg = [raw, chi](const Vec& u) -> Mat {
    double c = chi.value(u);
    if (c == 0.0) return Mat::Zero(u.size(), u.size());
    Mat out = c * raw.dg(u);
    out += raw.g(u) * chi.gradient(u).transpose();
    return out;
  };
  Vec origin = Vec::Zero(raw.components);
  nl.g_zero_at_origin = raw.g(origin).norm() == 0.0;
  return nl;
}

Nonlinearity zero_nonlinearity(int components) {
  if (components < 1 || components > kMaxComponents) throw domain_error("unsupported component count");
  Nonlinearity nl;
  nl.name = "zero";
  nl.components = components;
  nl.support_radius = 0.0;
  nl.f = [](const Vec& u) -> Mat { return Mat::Zero(u.size(), u.size()); };
  nl.df = [](const Vec& u, const Vec&) -> Mat { return Mat::Zero(u.size(), u.size()); };
  nl.d2f = [](const Vec& u, const Vec&, const Vec&) -> Mat { return Mat::Zero(u.size(), u.size()); };
  nl.g = [](const Vec& u) -> Vec { return Vec::Zero(u.size()); };
  nl.dg = [](const Vec& u) -> Mat { return Mat::Zero(u.size(), u.size()); };
  return nl;
}

Nonlinearity burgers_cutoff(double strength, double reaction, double radius) {
  RawNonlinearity raw;
  raw.name = "burgers-cutoff";
  raw.components = 1;
  raw.f = [strength](const Vec& u) -> Mat { return Mat::Constant(1, 1, strength * u(0)); };
  raw.df = [strength](const Vec&, const Vec& a) -> Mat { return Mat::Constant(1, 1, strength * a(0)); };
  raw.d2f = [](const Vec&, const Vec&, const Vec&) -> Mat { return Mat::Zero(1, 1); };
  raw.g = [reaction](const Vec& u) -> Vec { return Vec::Constant(1, -reaction * u(0)); };
  raw.dg = [reaction](const Vec&) -> Mat { return Mat::Constant(1, 1, -reaction); };
  return make_cutoff_nonlinearity(raw, radius);
}

Nonlinearity coupled_2d(double strength, double rotation, double radius) {
  RawNonlinearity raw;
  raw.name = "coupled-2d";
  raw.components = 2;
  auto shape = [strength](const Vec& u) -> Mat {
    Mat m(2, 2);
    m << u(0), u(1), -u(1), u(0);
    return strength * m;
  };
  raw.f = shape;
  raw.df = [shape](const Vec&, const Vec& a) -> Mat { return shape(a); };
  raw.d2f = [](const Vec&, const Vec&, const Vec&) -> Mat { return Mat::Zero(2, 2); };
  Mat rot(2, 2);
  rot << 0.0, -rotation, rotation, 0.0;
  raw.g = [rot](const Vec& u) -> Vec { return rot * u; };
  raw.dg = [rot](const Vec&) -> Mat { return rot; };
  return make_cutoff_nonlinearity(raw, radius);
}

Nonlinearity constant_matrix(const Mat& A, double radius) {
  if (A.rows() != A.cols()) throw domain_error("constant advection matrix must be square");
  const int m = static_cast<int>(A.rows());
  RawNonlinearity raw;
  raw.name = "constant-matrix";
  raw.components = m;
  raw.f = [A](const Vec&) -> Mat { return A; };
  raw.df = [m](const Vec&, const Vec&) -> Mat { return Mat::Zero(m, m); };
  raw.d2f = [m](const Vec&, const Vec&, const Vec&) -> Mat { return Mat::Zero(m, m); };
  raw.g = [m](const Vec&) -> Vec { return Vec::Zero(m); };
  raw.dg = [m](const Vec&) -> Mat { return Mat::Zero(m, m); };
  return make_cutoff_nonlinearity(raw, radius);
}

Nonlinearity scaled(const Nonlinearity& nl, double s) {
  Nonlinearity out = nl;
  out.f = [f = nl.f, s](const Vec& u) -> Mat { return s * f(u); };
  out.df = [df = nl.df, s](const Vec& u, const Vec& a) -> Mat { return s * df(u, a); };
  out.d2f = [d2f = nl.d2f, s](const Vec& u, const Vec& a, const Vec& b) -> Mat { return s * d2f(u, a, b); };
  out.g = [g = nl.g, s](const Vec& u) -> Vec { return s * g(u); };
  out.dg = [dg = nl.dg, s](const Vec& u) -> Mat { return s * dg(u); };
  return out;
}

NonlinearityAudit audit_nonlinearity(const Nonlinearity& nl, int samples, std::uint64_t seed) {
  NonlinearityAudit audit;
  const int m = nl.components;
  double radius = nl.support_radius > 0.0 ? nl.support_radius : 1.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  auto random_vec = [&](double scale) {
    Vec v(m);
    for (int i = 0; i < m; ++i) v(i) = normal(rng);
    return Vec(scale * v / v.norm());
  };
  auto rel = [](double err, double ref) { return err / std::max(ref, 1e-3); };
  const double h = 1e-5;
  for (int s = 0; s < samples; ++s) {
    Vec u = random_vec(radius * uniform(rng));
    Vec a = random_vec(1.0);
    Vec b = random_vec(1.0);
    Mat fd = (nl.f(u + h * a) - nl.f(u - h * a)) / (2.0 * h);
    Mat exact = nl.df(u, a);
    audit.df_error = std::max(audit.df_error, rel((fd - exact).norm(), exact.norm()));
    Mat fd2 = (nl.df(u + h * b, a) - nl.df(u - h * b, a)) / (2.0 * h);
    Mat exact2 = nl.d2f(u, a, b);
    audit.d2f_error = std::max(audit.d2f_error, rel((fd2 - exact2).norm(), exact2.norm()));
    Vec gd = (nl.g(u + h * a) - nl.g(u - h * a)) / (2.0 * h);
    Vec gexact = nl.dg(u) * a;
    audit.dg_error = std::max(audit.dg_error, rel((gd - gexact).norm(), gexact.norm()));
    if (nl.support_radius > 0.0) {
      Vec outside = random_vec(radius * (1.0 + 2.0 * uniform(rng)));
      audit.support_leak = std::max({audit.support_leak, nl.f(outside).norm(), nl.g(outside).norm()});
    }
  }
  return audit;
}

GradientNonlinearity gradient_nonlinearity(const QuadraticCoefficients& c, double radius) {
  if (!(radius > 0.0)) throw domain_error("cut-off radius must be positive");
  GradientNonlinearity nl;
  nl.name = "general-f(u,ux)";
  nl.support_radius = radius;
  const double r2 = radius * radius;
  struct Parts {
    double chi, chi_u, chi_p, chi_uu, chi_up, chi_pp;
    double P, P_u, P_p, P_uu, P_up, P_pp;
  };
  auto parts = [c, r2](double u, double p) {
    Parts q{};
    double s = (u * u + p * p) / r2;
    double d1 = profile_slope(s);
    double d2 = profile_curvature(s);
    q.chi = profile(s);
    q.chi_u = d1 * 2.0 * u / r2;
    q.chi_p = d1 * 2.0 * p / r2;
    q.chi_uu = d2 * 4.0 * u * u / (r2 * r2) + d1 * 2.0 / r2;
    q.chi_up = d2 * 4.0 * u * p / (r2 * r2);
    q.chi_pp = d2 * 4.0 * p * p / (r2 * r2) + d1 * 2.0 / r2;
    q.P = c.c0 + c.cu * u + c.cp * p + c.cuu * u * u + c.cup * u * p + c.cpp * p * p;
    q.P_u = c.cu + 2.0 * c.cuu * u + c.cup * p;
    q.P_p = c.cp + c.cup * u + 2.0 * c.cpp * p;
    q.P_uu = 2.0 * c.cuu;
    q.P_up = c.cup;
    q.P_pp = 2.0 * c.cpp;
    return q;
  };
  nl.f = [parts](double u, double p) {
    auto q = parts(u, p);
    return q.chi * q.P;
  };
  nl.fu = [parts](double u, double p) {
    auto q = parts(u, p);
    return q.chi_u * q.P + q.chi * q.P_u;
  };
  nl.fp = [parts](double u, double p) {
    auto q = parts(u, p);
    return q.chi_p * q.P + q.chi * q.P_p;
  };
  nl.fuu = [parts](double u, double p) {
    auto q = parts(u, p);
    return q.chi_uu * q.P + 2.0 * q.chi_u * q.P_u + q.chi * q.P_uu;
  };
  nl.fup = [parts](double u, double p) {
    auto q = parts(u, p);
    return q.chi_up * q.P + q.chi_u * q.P_p + q.chi_p * q.P_u + q.chi * q.P_up;
  };
  nl.fpp = [parts](double u, double p) {
    auto q = parts(u, p);
    return q.chi_pp * q.P + 2.0 * q.chi_p * q.P_p + q.chi * q.P_pp;
  };
  return nl;
}

GradientNonlinearity zero_gradient_nonlinearity() {
  GradientNonlinearity nl;
  nl.name = "zero";
  auto zero = [](double, double) { return 0.0; };
  nl.f = nl.fu = nl.fp = nl.fuu = nl.fup = nl.fpp = zero;
  return nl;
}

GradientBounds gradient_bounds(const GradientNonlinearity& nl, int samples_per_axis) {
  GradientBounds b;
  if (nl.support_radius <= 0.0) return b;
  const double r = nl.support_radius;
  for (int i = 0; i < samples_per_axis; ++i) {
    double u = -r + 2.0 * r * i / (samples_per_axis - 1);
    for (int j = 0; j < samples_per_axis; ++j) {
      double p = -r + 2.0 * r * j / (samples_per_axis - 1);
      b.fu = std::max(b.fu, std::abs(nl.fu(u, p)));
      b.fp = std::max(b.fp, std::abs(nl.fp(u, p)));
    }
  }
  return b;
}

double max_at_zero_state(const GradientNonlinearity& nl, int samples) {
  double r = nl.support_radius > 0.0 ? nl.support_radius : 1.0;
  double worst = 0.0;
  for (int j = 0; j < samples; ++j) {
    double p = -1.5 * r + 3.0 * r * j / (samples - 1);
    worst = std::max(worst, std::abs(nl.f(0.0, p)));
  }
  return worst;
}

}  // namespace imlab
