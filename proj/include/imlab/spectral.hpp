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

namespace imlab {

enum class Basis { DirichletSine, NeumannCosine };

const char* basis_name(Basis basis);
Basis basis_from_name(const char* name);

// Eigenvalue (pi k / L)^2 of -d^2/dx^2. Dirichlet requires k >= 1, Neumann k >= 0.
double eigenvalue(int k, double length, Basis basis);

// (lambda_{n+1} - lambda_n) / (sqrt(lambda_n) + sqrt(lambda_{n+1})) for the Dirichlet spectrum.
double gap_ratio(int n, double length);
double gap_difference(int n, double length);

// An m-component function on (0, L) in the eigenbasis of -d^2/dx^2.
// coeffs(i, c) is the coefficient of basis function i of component c. Storage index i
// maps to wavenumber i + 1 for the sine basis and to wavenumber i for the cosine basis.
struct Field {
  Basis basis = Basis::DirichletSine;
  double length = 1.0;
  Eigen::MatrixXd coeffs;

  static Field zeros(Basis basis, double length, int modes, int components);

  int modes() const { return static_cast<int>(coeffs.rows()); }
  int components() const { return static_cast<int>(coeffs.cols()); }
  int wavenumber(int index) const { return basis == Basis::DirichletSine ? index + 1 : index; }
  double eigenvalue_at(int index) const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

void require_compatible(const Field& a, const Field& b);

// Keeps the first K basis functions (low) or the rest (high).
Field project_low(const Field& v, int K);
Field project_high(const Field& v, int K);

// Pads with zeros or truncates to the given number of basis functions.
Field resized(const Field& v, int modes);

// Uniform collocation grid x_j = j L / M, j = 0..M, with trapezoid weights.
// The default resolution for an N-mode field is M = 2N intervals.
struct Grid {
  double length = 1.0;
  int intervals = 0;
  Eigen::VectorXd x;
  Eigen::VectorXd weights;
};

Grid make_grid(double length, int intervals);
inline int default_intervals(int modes) { return 2 * modes; }

// Grid values, one row per node (intervals + 1 rows), one column per component.
Eigen::MatrixXd synthesize(const Field& v, int intervals);
Eigen::MatrixXd synthesize(const Field& v);
// Trapezoid projection of grid values onto the first 'modes' basis functions.
Field analyze(const Eigen::MatrixXd& values, Basis basis, double length, int modes);

// Spectral x-derivative. Sine fields map to N+1 cosine modes, cosine fields to N sine modes.
Field derivative(const Field& v);
Field second_derivative(const Field& v);

double norm_l2(const Field& v);
double norm_h1(const Field& v);
double norm_h1_squared(const Field& v);
// Max over an oversampled grid of the pointwise Euclidean norm.
double norm_linf(const Field& v, int oversample = 4);
double dot_h1(const Field& a, const Field& b);

struct Norms {
  double l2 = 0.0;
  double h1 = 0.0;
  double linf = 0.0;
};
Norms norms(const Field& v);

// Per-coefficient weights (1 + lambda_k) of the H^1 norm, column-major flattened like coeffs.
Eigen::VectorXd h1_weights(const Field& shape);
Eigen::VectorXd eigenvalues_of(const Field& shape);

}  // namespace imlab
