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

#include "imlab/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "imlab/error.hpp"

namespace imlab {

namespace {

// (1 - e^{-z}) / z and (1 - e^{-z}(1 + z)) / z^2 with their series near zero.
double phi1(double z) {
  if (std::abs(z) < 1e-4) return 1.0 - z / 2.0 + z * z / 6.0;
  return -std::expm1(-z) / z;
}

double phi2(double z) {
  if (std::abs(z) < 1e-3) return 0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0;
  return (1.0 - std::exp(-z) * (1.0 + z)) / (z * z);
}

}  // namespace

GapReport spectral_gap_check(int n, double length, double L1, double L2) {
  if (n < 1) throw domain_error("n must be at least 1");
  if (L1 < 0.0 || L2 < 0.0) throw domain_error("Lipschitz constants must be non-negative");
  GapReport r;
  r.n = n;
  r.L1 = L1;
  r.L2 = L2;
  r.gap = gap_difference(n, length);
  r.sqrt_lambda_next = std::sqrt(eigenvalue(n + 1, length, Basis::DirichletSine));
  r.transport_ok = r.gap / r.sqrt_lambda_next > 4.0 * L1;
  r.source_ok = r.gap > 4.0 * L2;
  r.budget = 2.0 * r.sqrt_lambda_next * L1 / r.gap + 2.0 * L2 / r.gap;
  r.pass = r.transport_ok && r.source_ok;
  return r;
}

int PerronConfig::steps() const { return static_cast<int>(std::ceil(horizon / dt - 1e-9)); }

PerronConfig make_perron_config_levels(double low, double high, double tolerance, double dt) {
  if (!(high > low)) throw config_error("the spectral split needs low < high");
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw config_error("tolerance must lie in (0, 1)");
  PerronConfig c;
  c.tolerance = tolerance;
  c.theta = 0.5 * (low + high);
  c.dt = dt > 0.0 ? dt : std::min(0.01, 0.05 / high);
  c.horizon = std::log(1.0 / tolerance) / (high - c.theta);
  // Round the horizon up to whole steps.
  c.horizon = c.steps() * c.dt;
  return c;
}

PerronConfig make_perron_config(int n, int K, double length, double tolerance, double dt) {
  if (n < 1) throw config_error("n must be at least 1");
  PerronConfig c = make_perron_config_levels(eigenvalue(n, length, Basis::DirichletSine),
                                             eigenvalue(n + 1, length, Basis::DirichletSine), tolerance, dt);
  c.n = n;
  c.K = K;
  c.length = length;
  return c;
}

Resolvent::Resolvent(const Eigen::VectorXd& decay, double theta, double dt, int steps)
    : decay_(decay), theta_(theta), dt_(dt), steps_(steps) {
  if (!(dt > 0.0) || steps < 1) throw config_error("resolvent needs a positive step and at least one interval");
  const Eigen::Index d = decay.size();
  e_.resize(d);
  alpha_.resize(d);
  beta_.resize(d);
  forward_.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const double gap = decay(k) - theta;
    if (std::abs(gap) < 1e-12 * std::max(1.0, std::abs(theta))) {
      throw config_error("theta coincides with an eigenvalue");
    }
    const double z = decay(k) * dt;
    forward_[k] = gap > 0.0;
    if (forward_[k]) {
      e_(k) = std::exp(-z);
      alpha_(k) = dt * phi2(z);
      beta_(k) = dt * (phi1(z) - phi2(z));
    } else {
      e_(k) = std::exp(z);
      alpha_(k) = dt * (phi1(-z) - phi2(-z));
      beta_(k) = dt * phi2(-z);
    }
  }
  time_weight_.resize(steps + 1);
  for (int j = 0; j <= steps; ++j) {
    double w = (j == 0 || j == steps) ? 0.5 * dt : dt;
    time_weight_(j) = w * std::exp(2.0 * theta * time(j));
  }
}

Eigen::MatrixXd Resolvent::apply(const Eigen::MatrixXd& h) const {
  const int J = steps_;
  if (h.rows() != decay_.size() || h.cols() != J + 1) throw domain_error("resolvent input has the wrong shape");
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(h.rows(), J + 1);
  for (Eigen::Index k = 0; k < h.rows(); ++k) {
    const double e = e_(k), a = alpha_(k), b = beta_(k);
    if (forward_[k]) {
      for (int j = 0; j < J; ++j) y(k, j + 1) = e * y(k, j) + a * h(k, j) + b * h(k, j + 1);
    } else {
      for (int j = J - 1; j >= 0; --j) y(k, j) = e * y(k, j + 1) - a * h(k, j) - b * h(k, j + 1);
    }
  }
  return y;
}

Eigen::MatrixXd Resolvent::apply_transpose(const Eigen::MatrixXd& g) const {
  const int J = steps_;
  if (g.rows() != decay_.size() || g.cols() != J + 1) throw domain_error("resolvent input has the wrong shape");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.rows(), J + 1);
  for (Eigen::Index k = 0; k < g.rows(); ++k) {
    const double e = e_(k), a = alpha_(k), b = beta_(k);
    if (forward_[k]) {
      // S_i = sum_{m >= i} e^{m - i} g_m.
      double next = 0.0;  // S_{i+1}
      for (int i = J; i >= 0; --i) {
        double s = g(k, i) + e * next;
        out(k, i) = a * next + (i >= 1 ? b * s : 0.0);
        next = s;
      }
    } else {
      // P_i = sum_{m <= i} e^{i - m} g_m over the rows m < J.
      double prev = 0.0;  // P_{i-1}
      for (int i = 0; i <= J; ++i) {
        double p = (i < J ? g(k, i) : 0.0) + e * prev;
        out(k, i) = -(i < J ? a * p : 0.0) - (i >= 1 ? b * prev : 0.0);
        prev = p;
      }
    }
  }
  return out;
}

double Resolvent::weighted_norm(const Eigen::MatrixXd& y, const Eigen::VectorXd& weight) const {
  double sum = 0.0;
  for (int j = 0; j <= steps_; ++j) sum += time_weight_(j) * y.col(j).cwiseAbs2().dot(weight);
  return std::sqrt(sum);
}

double Resolvent::row_norm(int row, int iterations) const {
  const int J = steps_;
  Resolvent single(decay_.segment(row, 1), theta_, dt_, J);
  // Power iteration on R* R, R* = W^{-1} R^T W in the weighted pairing.
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(1, J + 1);
  Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    double nx = single.weighted_norm(x, one);
    x /= nx;
    Eigen::MatrixXd y = single.apply(x);
    estimate = single.weighted_norm(y, one);
    Eigen::MatrixXd wy = y.array() * time_weight_.transpose().array();
    x = single.apply_transpose(wy).array() / time_weight_.transpose().array();
  }
  return estimate;
}

ResolventNorms resolvent_norms(const Resolvent& resolvent, int n) {
  ResolventNorms norms;
  const Eigen::VectorXd& decay = resolvent.decay();
  std::vector<double> seen;
  for (Eigen::Index k = 0; k < decay.size(); ++k) {
    double lambda = decay(k);
    if (std::find(seen.begin(), seen.end(), lambda) != seen.end()) continue;
    seen.push_back(lambda);
    double r = resolvent.row_norm(static_cast<int>(k), 3000);
    norms.phi_to_phi = std::max(norms.phi_to_phi, r);
    norms.l2_to_phi = std::max(norms.l2_to_phi, std::sqrt(1.0 + lambda) * r);
  }
  std::sort(seen.begin(), seen.end());
  if (n < 1 || n >= static_cast<int>(seen.size())) throw domain_error("n outside the spectrum of the resolvent");
  const double gap = seen[n] - seen[n - 1];
  norms.phi_bound = 2.0 / gap;
  norms.l2_bound = 2.0 * std::sqrt(seen[n]) / gap;
  return norms;
}

Eigen::VectorXd PerronProblem::embed(const Eigen::VectorXd& base) const {
  if (base.size() != static_cast<Eigen::Index>(low.size())) throw domain_error("base point has the wrong dimension");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dimension());
  for (size_t i = 0; i < low.size(); ++i) x(low[i]) = base(i);
  return x;
}

Eigen::VectorXd PerronProblem::base_of(const Eigen::VectorXd& x) const {
  Eigen::VectorXd b(low.size());
  for (size_t i = 0; i < low.size(); ++i) b(i) = x(low[i]);
  return b;
}

Eigen::VectorXd PerronProblem::high_of(const Eigen::VectorXd& x) const {
  Eigen::VectorXd h = x;
  for (int i : low) h(i) = 0.0;
  return h;
}

double PerronProblem::norm(const Eigen::VectorXd& x) const { return std::sqrt(x.cwiseAbs2().dot(norm_weight)); }

PerronProblem transformed_perron_problem(const FieldShape& shape, const TransformedProblem& problem, int n) {
  if (n < 1 || n >= shape.modes) throw config_error("n must lie in [1, modes)");
  PerronProblem p;
  Field zero = shape.zeros();
  p.decay = eigenvalues_of(zero);
  p.norm_weight = h1_weights(zero);
  for (int c = 0; c < shape.components; ++c) {
    for (int i = 0; i < n; ++i) p.low.push_back(c * shape.modes + i);
  }
  ModalSystem system = transformed_system(shape, problem);
  p.forcing = system.forcing;
  return p;
}

PerronResult perron_solve(const Eigen::VectorXd& base, const PerronProblem& problem, const Resolvent& resolvent,
                          double tolerance, int max_iterations, const Eigen::MatrixXd* warm) {
  const int J = resolvent.steps();
  const int d = problem.dimension();
  if (resolvent.decay().size() != d) throw domain_error("resolvent and problem dimensions differ");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, J + 1);
  for (size_t i = 0; i < problem.low.size(); ++i) {
    const int k = problem.low[i];
    for (int j = 0; j <= J; ++j) w(k, j) = std::exp(-problem.decay(k) * resolvent.time(j)) * base(i);
  }
  PerronResult result;
  Eigen::MatrixXd z = warm ? *warm : Eigen::MatrixXd::Zero(d, J + 1);
  if (z.rows() != d || z.cols() != J + 1) throw domain_error("warm start has the wrong shape");
  const double floor = std::max(1e-14, 1e-3 * tolerance);
  Eigen::MatrixXd h(d, J + 1);
  for (int it = 1; it <= max_iterations; ++it) {
    for (int j = 0; j <= J; ++j) h.col(j) = problem.forcing(w.col(j) + z.col(j));
    Eigen::MatrixXd next = resolvent.apply(h);
    double delta = resolvent.weighted_norm(next - z, problem.norm_weight);
    if (!std::isfinite(delta)) throw numerical_error("Perron iteration produced a non-finite correction");
    z = std::move(next);
    result.iterations = it;
    if (!result.increments.empty() && result.increments.back() > floor) {
      double q = delta / result.increments.back();
      result.contraction.push_back(q);
      result.max_contraction = std::max(result.max_contraction, q);
      if (q >= 1.0 && delta > tolerance) {
        throw numerical_error("Perron map is not contracting (measured factor " + std::to_string(q) + ")");
      }
    }
    result.increments.push_back(delta);
    if (delta <= tolerance) {
      result.image = problem.high_of(z.col(J));
      result.correction = std::move(z);
      return result;
    }
  }
  throw numerical_error("Perron iteration did not reach the tolerance in " + std::to_string(max_iterations) +
                        " iterations");
}

ManifoldGraph::ManifoldGraph(int base_dimension, int dimension)
    : base_dimension_(base_dimension), dimension_(dimension) {}

void ManifoldGraph::add(const Eigen::VectorXd& base, const Eigen::VectorXd& image) {
  if (base.size() != base_dimension_ || image.size() != dimension_) throw domain_error("graph entry has the wrong shape");
  bases_.push_back(base);
  images_.push_back(image);
  spacing_ = 0.0;
  for (size_t i = 0; i < bases_.size(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < bases_.size(); ++j) {
      if (i != j) nearest = std::min(nearest, (bases_[i] - bases_[j]).norm());
    }
    if (std::isfinite(nearest)) spacing_ = std::max(spacing_, nearest);
  }
}

Eigen::VectorXd ManifoldGraph::evaluate(const Eigen::VectorXd& base, bool* outside) const {
  if (bases_.empty()) throw domain_error("manifold graph is empty");
  if (base.size() != base_dimension_) throw domain_error("query has the wrong dimension");
  std::vector<std::pair<double, int>> order;
  for (size_t i = 0; i < bases_.size(); ++i) order.push_back({(bases_[i] - base).norm(), static_cast<int>(i)});
  const int use = std::min<int>(static_cast<int>(order.size()), 2 * base_dimension_ + 1);
  std::partial_sort(order.begin(), order.begin() + use, order.end());
  const int anchor = order[0].second;
  if (outside) *outside = order[0].first > spacing_ * (1.0 + 1e-9);
  if (use < 2) return images_[anchor];
  Eigen::MatrixXd B(use - 1, base_dimension_);
  Eigen::MatrixXd Y(use - 1, dimension_);
  for (int i = 1; i < use; ++i) {
    B.row(i - 1) = (bases_[order[i].second] - bases_[anchor]).transpose();
    Y.row(i - 1) = (images_[order[i].second] - images_[anchor]).transpose();
  }
  Eigen::MatrixXd slope_t = B.colPivHouseholderQr().solve(Y);  // base_dimension x dimension
  return images_[anchor] + slope_t.transpose() * (base - bases_[anchor]);
}

ManifoldGraph build_manifold(const std::vector<Eigen::VectorXd>& bases, const PerronProblem& problem,
                             const Resolvent& resolvent, double tolerance, int max_iterations, BuildReport* report) {
  ManifoldGraph graph(static_cast<int>(problem.low.size()), problem.dimension());
  std::vector<int> order(bases.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return bases[a].norm() < bases[b].norm(); });
  std::vector<Eigen::MatrixXd> solved(bases.size());
  std::vector<int> done;
  if (report) report->solves.assign(bases.size(), {});
  for (int idx : order) {
    const Eigen::MatrixXd* warm = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (int other : done) {
      double dist = (bases[other] - bases[idx]).norm();
      if (dist < best) {
        best = dist;
        warm = &solved[other];
      }
    }
    PerronResult r = perron_solve(bases[idx], problem, resolvent, tolerance, max_iterations, warm);
    solved[idx] = r.correction;
    done.push_back(idx);
    if (report) {
      report->max_contraction = std::max(report->max_contraction, r.max_contraction);
      report->max_iterations = std::max(report->max_iterations, r.iterations);
      r.correction.resize(0, 0);
      report->solves[idx] = std::move(r);
    }
  }
  for (size_t i = 0; i < bases.size(); ++i) graph.add(bases[i], problem.high_of(solved[i].col(resolvent.steps())));
  return graph;
}

std::vector<Eigen::VectorXd> grid_bases(int base_dimension, double extent, int per_axis) {
  if (base_dimension < 1 || per_axis < 1) throw domain_error("grid needs positive dimension and size");
  std::vector<Eigen::VectorXd> out;
  std::vector<int> index(base_dimension, 0);
  while (true) {
    Eigen::VectorXd p(base_dimension);
    for (int i = 0; i < base_dimension; ++i) {
      p(i) = per_axis == 1 ? 0.0 : -extent + 2.0 * extent * index[i] / (per_axis - 1);
    }
    out.push_back(p);
    int i = 0;
    while (i < base_dimension && ++index[i] == per_axis) index[i++] = 0;
    if (i == base_dimension) break;
  }
  return out;
}

TrackingFit fit_tracking(const std::vector<double>& times, const std::vector<double>& distance, double floor) {
  if (times.size() != distance.size() || times.empty()) throw domain_error("tracking record is empty or ragged");
  TrackingFit fit;
  fit.times = times;
  fit.distance = distance;
  fit.floor = floor;
  const double start = distance.front();
  if (!(start > 100.0 * floor)) {
    fit.degenerate = true;
    return fit;
  }
  size_t i = 0;
  while (i < distance.size() && distance[i] > start / 10.0) ++i;
  size_t j = i;
  while (j < distance.size() && distance[j] >= 10.0 * floor) ++j;
  if (j - i < 3) {
    fit.degenerate = true;
    return fit;
  }
  std::vector<double> t(times.begin() + i, times.begin() + j), logd;
  for (size_t k = i; k < j; ++k) logd.push_back(std::log(distance[k]));
  fit.window_begin = static_cast<int>(i);
  fit.window_end = static_cast<int>(j);
  fit.rate = -fit_slope(t, logd);
  return fit;
}

std::vector<double> manifold_distance(const std::vector<Eigen::VectorXd>& states, const PerronProblem& problem,
                                      const Resolvent& resolvent, double tolerance, int max_iterations) {
  std::vector<double> out;
  out.reserve(states.size());
  Eigen::MatrixXd warm;
  for (const auto& x : states) {
    PerronResult r = perron_solve(problem.base_of(x), problem, resolvent, tolerance, max_iterations,
                                  warm.size() ? &warm : nullptr);
    warm = r.correction;
    out.push_back(problem.norm(problem.high_of(x) - problem.high_of(r.image)));
  }
  return out;
}

InvarianceReport invariance_residual(const ManifoldGraph& graph, const PerronProblem& problem, double dt) {
  InvarianceReport report;
  for (int i = 0; i < graph.size(); ++i) {
    const Eigen::VectorXd& p = graph.bases()[i];
    Eigen::VectorXd x = problem.embed(p) + graph.images()[i];
    Eigen::VectorXd next = etd_step(problem.decay, x, problem.forcing(x), dt);
    bool outside = false;
    Eigen::VectorXd predicted = graph.evaluate(problem.base_of(next), &outside);
    if (outside) ++report.outside;
    double r = problem.norm(problem.high_of(next) - predicted);
    double base_norm = problem.norm(problem.embed(p));
    report.max_residual = std::max(report.max_residual, r);
    report.max_relative = std::max(report.max_relative, r / (1.0 + base_norm));
  }
  return report;
}

ParameterChoice choose_parameters(const Nonlinearity& nl, const FieldShape& shape, const CutoffSpec& cutoff,
                                  const std::vector<SamplePair>& pairs, const ChoiceOptions& options) {
  ParameterChoice choice;
  const double floor = std::numbers::pi / (2.0 * shape.length);
  const int n_max = shape.modes / 4;
  for (int K = options.K_start; K <= std::min(options.K_max, shape.modes); K *= 2) {
    TransformedProblem problem;
    problem.nl = nl;
    problem.K = K;
    problem.cutoff = cutoff;
    LipschitzReport lip;
    try {
      lip = measure_transformed_lipschitz(problem, pairs);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Numerical) throw;
      continue;  // K below the uniqueness threshold for some sample
    }
    choice.sweep.push_back(lip);
    const double L1 = options.safety * lip.L1, L2 = options.safety * lip.L2;
    if (!(4.0 * L1 < floor)) continue;
    for (int n = std::max(1, options.n_min); n <= n_max; ++n) {
      GapReport gap = spectral_gap_check(n, shape.length, L1, L2);
      gap.K = K;
      if (gap.pass && gap.budget <= options.max_budget) {
        choice.K = K;
        choice.n = n;
        choice.gap = gap;
        choice.config = make_perron_config(n, K, shape.length);
        return choice;
      }
    }
  }
  throw config_error("no (K, n) pair passes the spectral gap conditions at this resolution");
}

}  // namespace imlab
