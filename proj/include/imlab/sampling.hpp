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

#include <cstdint>
#include <random>
#include <vector>

#include "imlab/spectral.hpp"

namespace imlab {

using Rng = std::mt19937_64;

struct FieldShape {
  Basis basis = Basis::DirichletSine;
  double length = 1.0;
  int modes = 1;
  int components = 1;

  Field zeros() const { return Field::zeros(basis, length, modes, components); }
};

FieldShape shape_of(const Field& v);

double standard_normal(Rng& rng);
double uniform(Rng& rng, double lo, double hi);

// Gaussian coefficients under an exp(-k / bandwidth) envelope, rescaled to the given H^1 norm.
// Small bandwidth gives fast coefficient decay (well resolved fields).
Field random_smooth_field(const FieldShape& shape, double h1_norm, double bandwidth, Rng& rng);

// Gaussian bump exp(-(x - c)^2 / (2 sigma^2)) with sigma = width / 4 along a random
// unit direction in component space, rescaled to the given H^1 norm.
Field localized_bump(const FieldShape& shape, double center, double width, double h1_norm, Rng& rng);

// Coefficients decaying like k^{-exponent} with random signs, rescaled to the given H^1 norm.
Field power_law_field(const FieldShape& shape, double exponent, double h1_norm, Rng& rng);

// H^1 representer of evaluation at 'center' (a kink there), along a random direction.
// Its high-mode tail is the slowest the H^1 norm allows in L^inf.
Field kink_field(const FieldShape& shape, double center, double h1_norm, Rng& rng);

// Rescales v to the requested H^1 norm (zero stays zero).
Field with_h1_norm(const Field& v, double h1_norm);

// Least-squares slope of log|c_k| versus log k over wavenumbers in [k_lo, k_hi],
// using the component-wise Euclidean norm of each coefficient row.
double tail_exponent(const Field& v, int k_lo, int k_hi);

// Least-squares slope of y versus x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace imlab
