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

#include "imlab/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "imlab/error.hpp"

namespace imlab {

namespace {

constexpr double kPi = std::numbers::pi;

// FFTW planning is not thread-safe; execution with the new-array interface is.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(fftw_r2r_kind kind, int n) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(static_cast<int>(kind), n);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<double> in(n), out(n);
    fftw_plan plan = fftw_plan_r2r_1d(n, in.data(), out.data(), kind,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_PRESERVE_INPUT);
    if (!plan) throw numerical_error("fftw planning failed for size " + std::to_string(n));
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& kv : plans_) fftw_destroy_plan(kv.second);
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

void run(fftw_r2r_kind kind, std::vector<double>& in, std::vector<double>& out) {
  fftw_plan plan = PlanCache::instance().get(kind, static_cast<int>(in.size()));
  fftw_execute_r2r(plan, in.data(), out.data());
}

double normalization(Basis basis, int k, double length) {
  if (basis == Basis::NeumannCosine && k == 0) return std::sqrt(1.0 / length);
  return std::sqrt(2.0 / length);
}

}  // namespace

const char* basis_name(Basis basis) {
  return basis == Basis::DirichletSine ? "dirichlet" : "neumann";
}

Basis basis_from_name(const char* name) {
  std::string s(name);
  if (s == "dirichlet") return Basis::DirichletSine;
  if (s == "neumann") return Basis::NeumannCosine;
  throw domain_error("unknown basis '" + s + "'");
}

double eigenvalue(int k, double length, Basis basis) {
  if (!(length > 0.0)) throw domain_error("length must be positive");
  if (basis == Basis::DirichletSine && k < 1) throw domain_error("sine modes start at k = 1");
  if (basis == Basis::NeumannCosine && k < 0) throw domain_error("cosine modes start at k = 0");
  double s = kPi * k / length;
  return s * s;
}

double gap_ratio(int n, double length) {
  if (n < 1) throw domain_error("gap_ratio needs n >= 1");
  if (!(length > 0.0)) throw domain_error("length must be positive");
  // lambda_{n+1} - lambda_n = (pi/L)^2 ((n+1)^2 - n^2) with the integer difference taken exactly.
  const double s = kPi / length;
  double numerator = s * s * static_cast<double>(2L * n + 1);
  double denominator = s * n + s * (n + 1);
  return numerator / denominator;
}

double gap_difference(int n, double length) {
  if (n < 1) throw domain_error("gap_difference needs n >= 1");
  if (!(length > 0.0)) throw domain_error("length must be positive");
  const double s = kPi / length;
  return s * s * static_cast<double>(2L * n + 1);
}

Field Field::zeros(Basis basis, double length, int modes, int components) {
  if (modes < 1 || components < 1) throw domain_error("field needs at least one mode and one component");
  Field f;
  f.basis = basis;
  f.length = length;
  f.coeffs = Eigen::MatrixXd::Zero(modes, components);
  return f;
}

double Field::eigenvalue_at(int index) const { return eigenvalue(wavenumber(index), length, basis); }

void require_compatible(const Field& a, const Field& b) {
  if (a.basis != b.basis || a.length != b.length || a.coeffs.rows() != b.coeffs.rows() ||
      a.coeffs.cols() != b.coeffs.cols()) {
    throw domain_error("incompatible fields");
  }
}

Field& Field::operator+=(const Field& other) {
  require_compatible(*this, other);
  coeffs += other.coeffs;
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_compatible(*this, other);
  coeffs -= other.coeffs;
  return *this;
}

Field& Field::operator*=(double s) {
  coeffs *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

Field project_low(const Field& v, int K) {
  if (K < 1 || K > v.modes()) throw domain_error("projection index out of range");
  Field out = v;
  out.coeffs.bottomRows(v.modes() - K).setZero();
  return out;
}

Field project_high(const Field& v, int K) {
  if (K < 1 || K > v.modes()) throw domain_error("projection index out of range");
  Field out = v;
  out.coeffs.topRows(K).setZero();
  return out;
}

Field resized(const Field& v, int modes) {
  Field out = Field::zeros(v.basis, v.length, modes, v.components());
  int keep = std::min(modes, v.modes());
  out.coeffs.topRows(keep) = v.coeffs.topRows(keep);
  return out;
}

Grid make_grid(double length, int intervals) {
  if (intervals < 2) throw domain_error("grid needs at least two intervals");
  Grid g;
  g.length = length;
  g.intervals = intervals;
  g.x.resize(intervals + 1);
  g.weights.resize(intervals + 1);
  double h = length / intervals;
  for (int j = 0; j <= intervals; ++j) {
    g.x(j) = j * h;
    g.weights(j) = (j == 0 || j == intervals) ? 0.5 * h : h;
  }
  return g;
}

Eigen::MatrixXd synthesize(const Field& v) { return synthesize(v, default_intervals(v.modes())); }

Eigen::MatrixXd synthesize(const Field& v, int intervals) {
  const int M = intervals;
  if (M < 2) throw domain_error("grid needs at least two intervals");
  if (v.modes() > M) throw domain_error("grid too coarse for field");
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(M + 1, v.components());
  const double L = v.length;
  for (int c = 0; c < v.components(); ++c) {
    if (v.basis == Basis::DirichletSine) {
      std::vector<double> in(M - 1, 0.0), out(M - 1);
      for (int i = 0; i < v.modes() && i < M - 1; ++i) in[i] = v.coeffs(i, c);
      run(FFTW_RODFT00, in, out);
      double s = 0.5 * std::sqrt(2.0 / L);
      for (int j = 1; j < M; ++j) values(j, c) = s * out[j - 1];
    } else {
      std::vector<double> in(M + 1, 0.0), out(M + 1);
      for (int i = 0; i < v.modes(); ++i) {
        double scale = normalization(v.basis, i, L);
        in[i] = (i == 0 || i == M) ? 2.0 * scale * v.coeffs(i, c) : scale * v.coeffs(i, c);
      }
      run(FFTW_REDFT00, in, out);
      for (int j = 0; j <= M; ++j) values(j, c) = 0.5 * out[j];
    }
  }
  return values;
}

Field analyze(const Eigen::MatrixXd& values, Basis basis, double length, int modes) {
  const int M = static_cast<int>(values.rows()) - 1;
  if (M < 2) throw domain_error("grid needs at least two intervals");
  if (modes > M) throw domain_error("more modes requested than the grid resolves");
  Field f = Field::zeros(basis, length, modes, static_cast<int>(values.cols()));
  const double h = length / M;
  for (int c = 0; c < f.components(); ++c) {
    if (basis == Basis::DirichletSine) {
      std::vector<double> in(M - 1), out(M - 1);
      for (int j = 1; j < M; ++j) in[j - 1] = values(j, c);
      run(FFTW_RODFT00, in, out);
      double s = 0.5 * h * std::sqrt(2.0 / length);
      for (int i = 0; i < modes && i < M - 1; ++i) f.coeffs(i, c) = s * out[i];
    } else {
      std::vector<double> in(M + 1), out(M + 1);
      for (int j = 0; j <= M; ++j) in[j] = values(j, c);
      run(FFTW_REDFT00, in, out);
      for (int i = 0; i < modes; ++i) f.coeffs(i, c) = 0.5 * h * normalization(basis, i, length) * out[i];
    }
  }
  return f;
}

Field derivative(const Field& v) {
  const double s = kPi / v.length;
  if (v.basis == Basis::DirichletSine) {
    Field d = Field::zeros(Basis::NeumannCosine, v.length, v.modes() + 1, v.components());
    for (int i = 0; i < v.modes(); ++i) d.coeffs.row(i + 1) = (s * (i + 1)) * v.coeffs.row(i);
    return d;
  }
  Field d = Field::zeros(Basis::DirichletSine, v.length, v.modes(), v.components());
  for (int k = 1; k < v.modes(); ++k) d.coeffs.row(k - 1) = (-s * k) * v.coeffs.row(k);
  return d;
}

Field second_derivative(const Field& v) {
  Field d = v;
  for (int i = 0; i < v.modes(); ++i) d.coeffs.row(i) *= -v.eigenvalue_at(i);
  return d;
}

double norm_l2(const Field& v) { return v.coeffs.norm(); }

double norm_h1_squared(const Field& v) {
  double sum = 0.0;
  for (int i = 0; i < v.modes(); ++i) sum += (1.0 + v.eigenvalue_at(i)) * v.coeffs.row(i).squaredNorm();
  return sum;
}

double norm_h1(const Field& v) { return std::sqrt(norm_h1_squared(v)); }

double dot_h1(const Field& a, const Field& b) {
  require_compatible(a, b);
  double sum = 0.0;
  for (int i = 0; i < a.modes(); ++i) sum += (1.0 + a.eigenvalue_at(i)) * a.coeffs.row(i).dot(b.coeffs.row(i));
  return sum;
}

double norm_linf(const Field& v, int oversample) {
  if (oversample < 1) throw domain_error("oversampling factor must be positive");
  Eigen::MatrixXd values = synthesize(v, oversample * default_intervals(v.modes()));
  return values.rowwise().norm().maxCoeff();
}

Norms norms(const Field& v) { return {norm_l2(v), norm_h1(v), norm_linf(v)}; }

Eigen::VectorXd eigenvalues_of(const Field& shape) {
  Eigen::VectorXd out(shape.coeffs.size());
  for (int c = 0; c < shape.components(); ++c)
    for (int i = 0; i < shape.modes(); ++i) out(c * shape.modes() + i) = shape.eigenvalue_at(i);
  return out;
}

Eigen::VectorXd h1_weights(const Field& shape) { return eigenvalues_of(shape).array() + 1.0; }

}  // namespace imlab
