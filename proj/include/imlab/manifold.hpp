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

#include <functional>
#include <vector>

#include "imlab/transformed.hpp"

namespace imlab {

struct GapReport {
  int n = 0;
  int K = 0;
  double L1 = 0.0;
  double L2 = 0.0;
  double gap = 0.0;               // lambda_{n+1} - lambda_n
  double sqrt_lambda_next = 0.0;  // lambda_{n+1}^{1/2}
  double budget = 0.0;            // Lipschitz constant of the Perron map
  bool transport_ok = false;      // gap / lambda_{n+1}^{1/2} > 4 L1
  bool source_ok = false;         // gap > 4 L2
  bool pass = false;
};

// Evaluates both gap conditions for the given constants (no safety factor applied here).
GapReport spectral_gap_check(int n, double length, double L1, double L2);

struct PerronConfig {
  int n = 1;
  int K = 0;
  double length = 1.0;
  double theta = 0.0;    // (lambda_n + lambda_{n+1}) / 2
  double horizon = 0.0;  // T with exp(-(lambda_{n+1} - theta) T) <= tolerance
  double dt = 0.0;
  double tolerance = 1e-9;
  int max_iterations = 200;
  int steps() const;
};

// dt <= 0 picks min(0.01, 0.05 / lambda_{n+1}): the quadrature is exact for forcing that is
// linear in time, so the step only needs to follow the slow backward growth.
PerronConfig make_perron_config(int n, int K, double length, double tolerance = 1e-9, double dt = 0.0);
// Same timing rule for an arbitrary split between the eigenvalues 'low' < 'high'.
PerronConfig make_perron_config_levels(double low, double high, double tolerance = 1e-9, double dt = 0.0);

// Weighted-space resolvent on the grid t_j = -T + j dt, j = 0..J, for dy/dt = -lambda y + h.
// Rows with lambda > theta start from zero at -T; rows with lambda < theta end at zero at t = 0.
// h is taken piecewise linear in time, for which the scheme is exact.
class Resolvent {
 public:
  Resolvent(const Eigen::VectorXd& decay, double theta, double dt, int steps);

  int steps() const { return steps_; }
  double dt() const { return dt_; }
  double theta() const { return theta_; }
  const Eigen::VectorXd& decay() const { return decay_; }
  double time(int j) const { return -dt_ * (steps_ - j); }

  // Columns are time samples.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& h) const;
  // Transpose in the plain Euclidean pairing of the sample arrays.
  Eigen::MatrixXd apply_transpose(const Eigen::MatrixXd& g) const;

  // sum_j w_j e^{2 theta t_j} sum_k weight_k y_kj^2, trapezoid w_j.
  double weighted_norm(const Eigen::MatrixXd& y, const Eigen::VectorXd& weight) const;
  // Norm of one row's scalar operator in the weighted time norm, by power iteration.
  double row_norm(int row, int iterations = 400) const;

 private:
  Eigen::VectorXd decay_;
  double theta_;
  double dt_;
  int steps_;
  Eigen::VectorXd e_, alpha_, beta_;
  std::vector<bool> forward_;
  Eigen::VectorXd time_weight_;
};

struct ResolventNorms {
  double phi_to_phi = 0.0;
  double l2_to_phi = 0.0;
  double phi_bound = 0.0;  // 2 / gap
  double l2_bound = 0.0;   // 2 lambda_{n+1}^{1/2} / gap
};

// Discrete operator norms over the rows of 'decay', with H^1 weights 1 + lambda.
ResolventNorms resolvent_norms(const Resolvent& resolvent, int n);

// The evolution the Perron map is built for, on flat coefficient vectors:
// dx/dt = -decay .* x + forcing(x), graph over the entries flagged in 'low'.
struct PerronProblem {
  Eigen::VectorXd decay;
  Eigen::VectorXd norm_weight;  // phase-space norm weights per entry
  std::vector<int> low;         // entries of P_n
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> forcing;

  int dimension() const { return static_cast<int>(decay.size()); }
  Eigen::VectorXd embed(const Eigen::VectorXd& base) const;
  Eigen::VectorXd base_of(const Eigen::VectorXd& x) const;
  Eigen::VectorXd high_of(const Eigen::VectorXd& x) const;
  double norm(const Eigen::VectorXd& x) const;
};

// The transformed equation on the sine basis; P_n is the first n modes of every component.
PerronProblem transformed_perron_problem(const FieldShape& shape, const TransformedProblem& problem, int n);

struct PerronResult {
  Eigen::VectorXd image;              // Q_n v(0), full flat vector with zero low entries
  Eigen::MatrixXd correction;         // z(t_j) columns, usable as a warm start
  std::vector<double> increments;     // weighted norms of successive corrections
  std::vector<double> contraction;    // ratios of successive increments above the round-off floor
  double max_contraction = 0.0;
  int iterations = 0;
};

// Fixed point z = R(F(z + w)) with w(t) = e^{-decay t} v0 on the low entries.
// Throws a numerical error if a measured contraction factor reaches 1 or the iteration stalls.
PerronResult perron_solve(const Eigen::VectorXd& base, const PerronProblem& problem, const Resolvent& resolvent,
                          double tolerance, int max_iterations, const Eigen::MatrixXd* warm = nullptr);

class ManifoldGraph {
 public:
  ManifoldGraph() = default;
  ManifoldGraph(int base_dimension, int dimension);

  void add(const Eigen::VectorXd& base, const Eigen::VectorXd& image);
  int size() const { return static_cast<int>(bases_.size()); }
  int base_dimension() const { return base_dimension_; }
  int dimension() const { return dimension_; }
  const std::vector<Eigen::VectorXd>& bases() const { return bases_; }
  const std::vector<Eigen::VectorXd>& images() const { return images_; }

  // Nearest base point plus a least-squares linear correction fitted on the 2d + 1 nearest
  // points. 'outside' is set when the query is farther from every base point than the
  // largest nearest-neighbour spacing in the table.
  Eigen::VectorXd evaluate(const Eigen::VectorXd& base, bool* outside = nullptr) const;

 private:
  int base_dimension_ = 0;
  int dimension_ = 0;
  std::vector<Eigen::VectorXd> bases_;
  std::vector<Eigen::VectorXd> images_;
  double spacing_ = 0.0;
};

struct BuildReport {
  std::vector<PerronResult> solves;
  double max_contraction = 0.0;
  int max_iterations = 0;
};

// Solves at every base point, warm-starting each from the nearest solved point.
ManifoldGraph build_manifold(const std::vector<Eigen::VectorXd>& bases, const PerronProblem& problem,
                             const Resolvent& resolvent, double tolerance, int max_iterations,
                             BuildReport* report = nullptr);

// Evenly spaced base points on the segment [-extent, extent] along each base axis
// ('per_axis' points each, tensor grid).
std::vector<Eigen::VectorXd> grid_bases(int base_dimension, double extent, int per_axis);

struct TrackingFit {
  std::vector<double> times;
  std::vector<double> distance;
  double floor = 0.0;
  double rate = 0.0;  // minus the fitted slope of log distance
  int window_begin = -1;
  int window_end = -1;  // exclusive
  bool degenerate = false;
};

// Fits log d(t) on the samples where d lies in [10 floor, d(0) / 10].
TrackingFit fit_tracking(const std::vector<double>& times, const std::vector<double>& distance, double floor);

// |Q_n x - M(P_n x)| in the problem norm for each state, M evaluated by a Perron solve at
// P_n x (warm-started along the list), so no interpolation error enters.
std::vector<double> manifold_distance(const std::vector<Eigen::VectorXd>& states, const PerronProblem& problem,
                                      const Resolvent& resolvent, double tolerance, int max_iterations);

// max over base points p of |Q_n x(dt) - M(P_n x(dt))| after one exponential Euler step from p + M(p),
// relative to 1 + |p|. 'outside' counts queries flagged by the interpolator.
struct InvarianceReport {
  double max_residual = 0.0;       // absolute
  double max_relative = 0.0;       // residual / (1 + |p|)
  int outside = 0;
};
InvarianceReport invariance_residual(const ManifoldGraph& graph, const PerronProblem& problem, double dt);

struct ParameterChoice {
  int K = 0;
  int n = 0;
  GapReport gap;
  std::vector<LipschitzReport> sweep;
  PerronConfig config;
};

struct ChoiceOptions {
  int K_start = 4;
  int K_max = 512;
  double safety = 2.0;
  double max_budget = 0.5;
  int n_min = 1;
};

// Doubles K until 4 safety L1(K) < pi / (2 length), then scans n <= modes / 4 for both gap
// conditions with budget <= max_budget, doubling K again if no n passes.
// Throws a configuration error when K or n run out.
ParameterChoice choose_parameters(const Nonlinearity& nl, const FieldShape& shape, const CutoffSpec& cutoff,
                                  const std::vector<SamplePair>& pairs, const ChoiceOptions& options = {});

}  // namespace imlab
