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

#include "imlab/transformed.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

#include "imlab/error.hpp"

namespace imlab {

namespace {

Vec row_vec(const Eigen::MatrixXd& values, int j) { return values.row(j).transpose(); }

Field field_from_rows(const std::vector<Vec>& rows, const Field& like) {
  Eigen::MatrixXd values(rows.size(), like.components());
  for (size_t j = 0; j < rows.size(); ++j) values.row(j) = rows[j].transpose();
  return analyze(values, like.basis, like.length, like.modes());
}

}  // namespace

void CutoffSpec::validate() const {
  if (!(inner > 0.0) || !(outer > inner)) throw config_error("cut-off needs 0 < inner < outer");
}

double CutoffSpec::value(double z) const {
  const double lo = inner * inner, hi = outer * outer;
  if (z <= lo) return 1.0;
  if (z >= hi) return 0.0;
  return 1.0 - smoothstep((z - lo) / (hi - lo));
}

double CutoffSpec::slope(double z) const {
  const double lo = inner * inner, hi = outer * outer;
  if (z <= lo || z >= hi) return 0.0;
  return -smoothstep_slope((z - lo) / (hi - lo)) / (hi - lo);
}

double CutoffSpec::lipschitz() const { return (15.0 / 8.0) / (outer * outer - inner * inner); }

MatrixField time_derivative_a(const Kernel& kernel, const Field& dt_u_low, const Nonlinearity& nl) {
  const std::vector<Mat>& A = kernel.coefficient;
  const int M = kernel.a.intervals;
  const int m = kernel.a.components();
  const double h = kernel.a.length / M;
  Eigen::MatrixXd q = synthesize(dt_u_low, 2 * M);
  auto forcing = [&](int i, const Mat& a) -> Mat {
    return 0.5 * nl.df(row_vec(kernel.projected_fine, i), row_vec(q, i)) * a;
  };
  // (a, b) advanced together so the stage values of a are the ones that defined the kernel.
  MatrixField b = MatrixField::identity(kernel.a.length, M, m);
  Mat ya = Mat::Identity(m, m);
  Mat yb = Mat::Zero(m, m);
  for (int j = 0; j < M; ++j) {
    const int i0 = 2 * j, im = 2 * j + 1, i1 = 2 * j + 2;
    Mat k1a = A[i0] * ya;
    Mat k1b = A[i0] * yb + forcing(i0, ya);
    Mat a2 = ya + 0.5 * h * k1a;
    Mat k2a = A[im] * a2;
    Mat k2b = A[im] * (yb + 0.5 * h * k1b) + forcing(im, a2);
    Mat a3 = ya + 0.5 * h * k2a;
    Mat k3a = A[im] * a3;
    Mat k3b = A[im] * (yb + 0.5 * h * k2b) + forcing(im, a3);
    Mat a4 = ya + h * k3a;
    Mat k4a = A[i1] * a4;
    Mat k4b = A[i1] * (yb + h * k3b) + forcing(i1, a4);
    b.value[j] = yb;
    b.slope[j] = k1b;
    ya += (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
    yb += (h / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
  }
  b.value[M] = yb;
  b.slope[M] = A[2 * M] * yb + forcing(2 * M, ya);
  return b;
}

TransformedTerms transformed_terms(const Field& v, int K, const Nonlinearity& nl, const FixedPointOptions& options) {
  TransformedTerms t;
  t.kernel = solve_a_of_v(v, K, nl, options);
  const MatrixField& a = t.kernel.a;
  const int M = a.intervals;
  Eigen::MatrixXd v_nodes = synthesize(v, M);
  Eigen::MatrixXd vx_nodes = synthesize(derivative(v), M);
  Eigen::MatrixXd px_nodes = synthesize(derivative(t.kernel.projected), M);

  std::vector<Vec> u_nodes(M + 1);
  for (int j = 0; j <= M; ++j) u_nodes[j] = a.value[j] * row_vec(v_nodes, j);
  t.u = field_from_rows(u_nodes, v);
  t.dt_u_low = project_low(rda_rhs(t.u, nl), K);
  t.dt_a = time_derivative_a(t.kernel, t.dt_u_low, nl);

  t.a_xx.resize(M + 1);
  t.F1.resize(M + 1);
  std::vector<Vec> transport(M + 1), source(M + 1);
  for (int j = 0; j <= M; ++j) {
    Vec p = row_vec(t.kernel.projected_fine, 2 * j);
    Mat fp = nl.f(p);
    Mat fu = nl.f(u_nodes[j]);
    t.a_xx[j] = 0.5 * fp * a.slope[j] + 0.5 * nl.df(p, row_vec(px_nodes, j)) * a.value[j];
    Eigen::PartialPivLU<Mat> lu(a.value[j]);
    t.F1[j] = lu.solve(Mat((fp - fu) * a.value[j]));
    transport[j] = t.F1[j] * row_vec(vx_nodes, j);
    Vec rhs = (t.a_xx[j] - t.dt_a.value[j] - fu * a.slope[j]) * row_vec(v_nodes, j) - nl.g(u_nodes[j]);
    source[j] = lu.solve(rhs);
  }
  t.F2_boundary = std::max(source.front().cwiseAbs().maxCoeff(), source.back().cwiseAbs().maxCoeff());
  t.F1_dxv = field_from_rows(transport, v);
  t.F2 = field_from_rows(source, v);
  return t;
}

Field cut_transport(const Field& v, const TransformedProblem& problem) {
  double phi = problem.cutoff.value(norm_h1_squared(v));
  if (phi == 0.0) return Field::zeros(v.basis, v.length, v.modes(), v.components());
  TransformedTerms t = transformed_terms(v, problem.K, problem.nl, problem.options);
  return phi * t.F1_dxv;
}

Field cut_source(const Field& v, const TransformedProblem& problem) {
  double phi = problem.cutoff.value(norm_h1_squared(v));
  if (phi == 0.0) return Field::zeros(v.basis, v.length, v.modes(), v.components());
  TransformedTerms t = transformed_terms(v, problem.K, problem.nl, problem.options);
  return phi * t.F2;
}

Field cut_forcing(const Field& v, const TransformedProblem& problem) {
  double phi = problem.cutoff.value(norm_h1_squared(v));
  if (phi == 0.0) return Field::zeros(v.basis, v.length, v.modes(), v.components());
  TransformedTerms t = transformed_terms(v, problem.K, problem.nl, problem.options);
  return phi * (t.F1_dxv + t.F2);
}

Field transformed_rhs(const Field& v, const TransformedProblem& problem) {
  return second_derivative(v) + cut_forcing(v, problem);
}

ModalSystem transformed_system(const FieldShape& shape, const TransformedProblem& problem) {
  problem.cutoff.validate();
  if (shape.basis != Basis::DirichletSine) throw domain_error("the transformed problem lives on the sine basis");
  ModalSystem system;
  system.decay = eigenvalues_of(shape.zeros());
  system.forcing = [shape, problem](const Eigen::VectorXd& x) {
    return flatten(cut_forcing(unflatten(x, shape), problem));
  };
  return system;
}

Trajectory evolve_transformed(const Field& v0, double T, double dt, const TransformedProblem& problem, int stride) {
  FieldShape shape = shape_of(v0);
  ModalTrajectory modal = evolve_modal(transformed_system(shape, problem), flatten(v0), T, dt, stride);
  Trajectory traj;
  traj.times = modal.times;
  traj.dt = modal.dt;
  for (const auto& x : modal.states) traj.states.push_back(unflatten(x, shape));
  return traj;
}

EquivalenceReport equivalence_check(const Field& u0, const TransformedProblem& problem, double T, double dt,
                                    int stride) {
  StepOptions options;
  options.stride = stride;
  Trajectory original = evolve(u0, T, dt, problem.nl, options);
  Field v0 = inverse_map_V(u0, problem.K, problem.nl);
  Trajectory transformed = evolve_transformed(v0, T, dt, problem, stride);
  if (original.times.size() != transformed.times.size()) {
    throw consistency_error("original and transformed runs recorded different instants");
  }
  EquivalenceReport report;
  for (size_t i = 0; i < original.times.size(); ++i) {
    Field mapped = inverse_map_V(original.states[i], problem.K, problem.nl);
    double d = norm_h1(mapped - transformed.states[i]);
    report.times.push_back(original.times[i]);
    report.deviation.push_back(d);
    report.max_deviation = std::max(report.max_deviation, d);
  }
  return report;
}

LipschitzEstimate measure_lipschitz(const FieldMap& op, const FieldNorm& domain, const FieldNorm& range,
                                    const std::vector<SamplePair>& pairs, int threads) {
  const int count = static_cast<int>(pairs.size());
  if (threads <= 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max(count, 1));
  std::vector<double> ratio(count, -1.0);
  auto work = [&](int begin) {
    for (int i = begin; i < count; i += threads) {
      double d = domain(pairs[i].first - pairs[i].second);
      if (d == 0.0) continue;
      ratio[i] = range(op(pairs[i].first) - op(pairs[i].second)) / d;
    }
  };
  std::vector<std::future<void>> jobs;
  for (int t = 0; t < threads; ++t) jobs.push_back(std::async(std::launch::async, work, t));
  for (auto& job : jobs) job.get();
  LipschitzEstimate est;
  for (int i = 0; i < count; ++i) {
    if (ratio[i] < 0.0) continue;
    if (!std::isfinite(ratio[i])) throw numerical_error("non-finite Lipschitz ratio");
    ++est.samples;
    if (ratio[i] > est.constant || est.argmax < 0) {
      est.constant = ratio[i];
      est.argmax = i;
    }
  }
  return est;
}

namespace {

Field sample_field(const FieldShape& shape, double norm, int kind, Rng& rng) {
  switch (kind % 4) {
    case 0:
      return random_smooth_field(shape, norm, uniform(rng, 2.0, 8.0), rng);
    case 1:
      return power_law_field(shape, uniform(rng, 1.6, 2.5), norm, rng);
    case 2:
      return kink_field(shape, uniform(rng, 0.1, 0.9) * shape.length, norm, rng);
    default: {
      double width = shape.length * std::pow(2.0, -uniform(rng, 2.0, 6.0));
      double center = uniform(rng, 0.25, 0.75) * shape.length;
      return localized_bump(shape, center, width, norm, rng);
    }
  }
}

}  // namespace

std::vector<SamplePair> lipschitz_pairs(const FieldShape& shape, double radius, int count, Rng& rng) {
  std::vector<SamplePair> pairs;
  pairs.reserve(count);
  const double eps[] = {1e-2, 1e-4};
  for (int i = 0; i < count; ++i) {
    int kind = static_cast<int>(rng() % 4);
    Field a = sample_field(shape, radius * std::sqrt(uniform(rng, 0.0, 1.0)), kind, rng);
    if (i % 2 == 0) {
      Field b = sample_field(shape, radius * std::sqrt(uniform(rng, 0.0, 1.0)), kind + 1, rng);
      pairs.push_back({a, b});
    } else {
      double e = eps[(i / 2) % 2];
      Field d = sample_field(shape, e * radius, static_cast<int>(rng() % 4), rng);
      pairs.push_back({a, a + d});
    }
  }
  return pairs;
}

std::vector<SamplePair> multiscale_pairs(const FieldShape& shape, double radius, int count, Rng& rng) {
  std::vector<SamplePair> pairs;
  pairs.reserve(count);
  const double eps[] = {1e-2, 1e-4};
  for (int i = 0; i < count; ++i) {
    double center = uniform(rng, 0.35, 0.65) * shape.length;
    double width = shape.length * std::pow(2.0, -uniform(rng, 3.0, 9.0));
    double norm = radius * uniform(rng, 0.5, 1.0);
    Field a = localized_bump(shape, center, width, norm, rng);
    double other = width * std::pow(2.0, uniform(rng, -2.0, 1.0));
    double shifted = center + uniform(rng, -1.0, 1.0) * width;
    if (i % 2 == 0) {
      pairs.push_back({a, localized_bump(shape, shifted, other, radius * uniform(rng, 0.0, 1.0), rng)});
    } else {
      pairs.push_back({a, a + localized_bump(shape, shifted, other, eps[(i / 2) % 2] * radius, rng)});
    }
  }
  return pairs;
}

LipschitzReport measure_transformed_lipschitz(const TransformedProblem& problem, const std::vector<SamplePair>& pairs,
                                              bool with_source, int threads) {
  // Both terms come from one evaluation per sample.
  auto terms = [&](const Field& v) {
    double phi = problem.cutoff.value(norm_h1_squared(v));
    Field zero = Field::zeros(v.basis, v.length, v.modes(), v.components());
    if (phi == 0.0) return std::pair<Field, Field>{zero, zero};
    TransformedTerms t = transformed_terms(v, problem.K, problem.nl, problem.options);
    return std::pair<Field, Field>{phi * t.F1_dxv, phi * t.F2};
  };
  const int count = static_cast<int>(pairs.size());
  if (threads <= 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max(count, 1));
  std::vector<double> r1(count, -1.0), r2(count, -1.0);
  auto work = [&](int begin) {
    for (int i = begin; i < count; i += threads) {
      double d = norm_h1(pairs[i].first - pairs[i].second);
      if (d == 0.0) continue;
      auto a = terms(pairs[i].first);
      auto b = terms(pairs[i].second);
      r1[i] = norm_l2(a.first - b.first) / d;
      if (with_source) r2[i] = norm_h1(a.second - b.second) / d;
    }
  };
  std::vector<std::future<void>> jobs;
  for (int t = 0; t < threads; ++t) jobs.push_back(std::async(std::launch::async, work, t));
  for (auto& job : jobs) job.get();
  LipschitzReport report;
  report.K = problem.K;
  for (int i = 0; i < count; ++i) {
    if (r1[i] < 0.0) continue;
    if (!std::isfinite(r1[i]) || (with_source && !std::isfinite(r2[i]))) {
      throw numerical_error("non-finite Lipschitz ratio");
    }
    ++report.samples;
    if (r1[i] > report.L1 || report.argmax_L1 < 0) {
      report.L1 = r1[i];
      report.argmax_L1 = i;
    }
    if (with_source && (r2[i] > report.L2 || report.argmax_L2 < 0)) {
      report.L2 = r2[i];
      report.argmax_L2 = i;
    }
  }
  return report;
}

double sup_F1(const Field& v, int K, const Nonlinearity& nl) {
  Kernel kernel = solve_a_of_v(v, K, nl);
  const MatrixField& a = kernel.a;
  Eigen::MatrixXd v_nodes = synthesize(v, a.intervals);
  double worst = 0.0;
  for (int j = 0; j <= a.intervals; ++j) {
    Vec u = a.value[j] * row_vec(v_nodes, j);
    Mat F = a.value[j].inverse() * (nl.f(row_vec(kernel.projected_fine, 2 * j)) - nl.f(u)) * a.value[j];
    worst = std::max(worst, F.norm());
  }
  return worst;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw domain_error("slope fit needs two or more points");
  std::vector<double> lx, ly;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw domain_error("log-log fit needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_slope(lx, ly);
}

}  // namespace imlab
