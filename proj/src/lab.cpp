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

#include "imlab/lab.hpp"

#include <yaml-cpp/yaml.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "imlab/error.hpp"
#include "json.hpp"

namespace imlab {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// One description of the config layout, walked by the YAML reader and the JSON echo.
template <class Visitor>
void visit_config(ExperimentConfig& c, Visitor& v) {
  v.field("scenario", c.scenario);
  v.field("seed", c.seed);
  v.field("output_dir", c.output_dir);
  v.field("threads", c.threads);
  v.field("length", c.length);
  v.field("components", c.components);
  v.field("modes", c.modes);
  v.section("nonlinearity", [&] {
    auto& p = c.nonlinearity;
    v.field("preset", p.name);
    v.field("strength", p.strength);
    v.field("reaction", p.reaction);
    v.field("rotation", p.rotation);
    v.field("radius", p.radius);
    v.section("general", [&] {
      v.field("c0", p.general.c0);
      v.field("cu", p.general.cu);
      v.field("cp", p.general.cp);
      v.field("cuu", p.general.cuu);
      v.field("cup", p.general.cup);
      v.field("cpp", p.general.cpp);
    });
  });
  v.section("manifold", [&] {
    auto& m = c.manifold;
    v.field("modes", m.modes);
    v.field("K", m.K);
    v.field("n", m.n);
    v.field("cutoff_inner", m.cutoff_inner);
    v.field("cutoff_outer", m.cutoff_outer);
    v.field("pair_radius_factor", m.pair_radius_factor);
    v.field("lipschitz_pairs", m.lipschitz_pairs);
    v.field("tolerance", m.tolerance);
    v.field("dt", m.dt);
    v.field("extent", m.extent);
    v.field("grid_points", m.grid_points);
    v.field("invariance_dt", m.invariance_dt);
  });
  v.section("roundtrip", [&] {
    v.field("samples", c.roundtrip.samples);
    v.field("radius", c.roundtrip.radius);
    v.field("K", c.roundtrip.K);
  });
  v.section("k_scaling", [&] {
    auto& k = c.k_scaling;
    v.field("modes", k.modes);
    v.field("K", k.K);
    v.field("radius", k.radius);
    v.field("pair_norm", k.pair_norm);
    v.field("pairs", k.pairs);
  });
  v.section("gap_table", [&] {
    v.field("n_max", c.gap_table.n_max);
    v.field("K", c.gap_table.K);
    v.field("arithmetic_n_max", c.gap_table.arithmetic_n_max);
  });
  v.section("resolvent", [&] {
    v.field("n", c.resolvent.n);
    v.field("modes", c.resolvent.modes);
    v.field("tolerance", c.resolvent.tolerance);
    v.field("dt", c.resolvent.dt);
  });
  v.section("oracle", [&] {
    auto& o = c.oracle;
    v.field("modes", o.modes);
    v.field("n", o.n);
    v.field("coupling", o.coupling);
    v.field("trials", o.trials);
    v.field("tolerance", o.tolerance);
    v.field("dt", o.dt);
  });
  v.section("tracking", [&] {
    auto& t = c.tracking;
    v.field("trajectories", t.trajectories);
    v.field("initial_norm", t.initial_norm);
    v.field("horizon", t.horizon);
    v.field("dt", t.dt);
    v.field("sample_every", t.sample_every);
    v.field("tolerance", t.tolerance);
  });
  v.section("equivalence", [&] {
    auto& e = c.equivalence;
    v.field("initial_norm", e.initial_norm);
    v.field("bandwidth", e.bandwidth);
    v.field("horizon", e.horizon);
    v.field("dt", e.dt);
    v.field("record_every", e.record_every);
    v.field("K", e.K);
    v.field("cutoff_inner", e.cutoff_inner);
    v.field("cutoff_outer", e.cutoff_outer);
  });
  v.section("upsilon", [&] {
    auto& u = c.upsilon;
    v.field("modes", u.modes);
    v.field("pairs", u.pairs);
    v.field("shift_factor", u.shift_factor);
    v.field("max_data_norm", u.max_data_norm);
  });
  v.section("neumann", [&] {
    auto& n = c.neumann;
    v.field("modes", n.modes);
    v.field("K", n.K);
    v.field("n", n.n);
    v.field("cutoff_inner", n.cutoff_inner);
    v.field("cutoff_outer", n.cutoff_outer);
    v.field("joint_radius", n.joint_radius);
    v.field("drift_norm", n.drift_norm);
    v.field("drift_horizon", n.drift_horizon);
    v.field("drift_dt", n.drift_dt);
    v.field("drift_constant", n.drift_constant);
    v.field("audit_trajectories", n.audit_trajectories);
  });
  v.section("dissipativity", [&] {
    auto& d = c.dissipativity;
    v.field("trajectories", d.trajectories);
    v.field("initial_norm", d.initial_norm);
    v.field("horizon", d.horizon);
    v.field("dt", d.dt);
    v.field("modes", d.modes);
  });
}

class YamlReader {
 public:
  explicit YamlReader(const YAML::Node& root) { stack_.push_back({root, {}, ""}); }

  template <class T>
  void field(const std::string& key, T& out) {
    Frame& f = stack_.back();
    if (!f.node.IsMap()) return;
    const YAML::Node& node = f.node;
    YAML::Node value = node[key];
    if (!value) return;
    f.seen.insert(key);
    try {
      out = value.as<T>();
    } catch (const YAML::Exception& e) {
      throw config_error("bad value for '" + f.path + key + "': " + e.what());
    }
  }

  void section(const std::string& key, const std::function<void()>& body) {
    Frame& f = stack_.back();
    if (!f.node.IsMap()) return;
    const YAML::Node& node = f.node;
    YAML::Node value = node[key];
    if (!value) return;
    f.seen.insert(key);
    if (value.IsNull()) return;
    if (!value.IsMap()) throw config_error("'" + f.path + key + "' must be a mapping");
    stack_.push_back({value, {}, f.path + key + "."});
    body();
    finish();
    stack_.pop_back();
  }

  void finish() {
    const Frame& f = stack_.back();
    if (!f.node.IsMap()) return;
    for (const auto& kv : f.node) {
      std::string key = kv.first.as<std::string>();
      if (!f.seen.count(key)) throw config_error("unknown config key '" + f.path + key + "'");
    }
  }

 private:
  struct Frame {
    YAML::Node node;
    std::set<std::string> seen;
    std::string path;
  };
  std::vector<Frame> stack_;
};

class JsonWriter {
 public:
  json root = json::object();

  template <class T>
  void field(const std::string& key, T& value) {
    (*current_)[key] = value;
  }

  void section(const std::string& key, const std::function<void()>& body) {
    json* parent = current_;
    current_ = &(*parent)[key];
    *current_ = json::object();
    body();
    current_ = parent;
  }

 private:
  json* current_ = &root;
};

json config_json(const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  JsonWriter w;
  visit_config(copy, w);
  return w.root;
}

const std::vector<std::pair<std::string, int>>& scenario_table() {
  static const std::vector<std::pair<std::string, int>> table = {
      {"gap-table", 1},   {"roundtrip", 2},    {"k-scaling", 3},        {"resolvent", 4},
      {"build-manifold", 5}, {"oracle", 6},    {"tracking", 7},         {"invariance", 8},
      {"equivalence", 9}, {"upsilon-audit", 10}, {"neumann-pipeline", 11}, {"dissipativity", 12},
  };
  return table;
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string short_num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

using Row = std::vector<std::string>;

// Collects checks, metrics and tables of one scenario and writes them out.
class Recorder {
 public:
  Recorder(const ExperimentConfig& cfg, const std::string& scenario) : cfg_(cfg) {
    result_.scenario = scenario;
    result_.criterion = scenario_criterion(scenario);
    result_.seed = cfg.seed;
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw io_error("cannot create output directory '" + cfg.output_dir + "': " + ec.message());
  }

  void check(const std::string& name, double value, const std::string& relation, double threshold) {
    bool pass = false;
    if (relation == "<=") pass = value <= threshold;
    else if (relation == ">=") pass = value >= threshold;
    else if (relation == "<") pass = value < threshold;
    else if (relation == ">") pass = value > threshold;
    else throw consistency_error("unknown relation " + relation);
    result_.checks.push_back({name, value, threshold, relation, pass});
  }

  void metric(const std::string& name, double value) { result_.metrics[name] = value; }

  void table(const std::string& name, Row header, const std::vector<Row>& rows) {
    std::string file = result_.scenario + "." + name + ".csv";
    std::ofstream out(fs::path(cfg_.output_dir) / file);
    if (!out) throw io_error("cannot write " + file);
    header.insert(header.begin(), "seed");
    auto line = [&](const Row& r) {
      for (size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << '\n';
    };
    line(header);
    for (Row r : rows) {
      r.insert(r.begin(), std::to_string(cfg_.seed));
      line(r);
    }
    result_.artifacts.push_back(file);
  }

  void timing(const std::string& name, double seconds) { timings_[name] = seconds; }

  ScenarioResult finish(double seconds) {
    result_.seconds = seconds;
    result_.artifacts.push_back(result_.scenario + ".json");
    json j;
    j["scenario"] = result_.scenario;
    j["criterion"] = result_.criterion;
    j["seed"] = result_.seed;
    j["pass"] = result_.pass();
    j["checks"] = json::array();
    for (const auto& c : result_.checks)
      j["checks"].push_back(
          {{"name", c.name}, {"value", c.value}, {"relation", c.relation}, {"threshold", c.threshold}, {"pass", c.pass}});
    j["metrics"] = result_.metrics;
    j["artifacts"] = result_.artifacts;
    j["config"] = config_json(cfg_);
    write(result_.scenario + ".json", j);
    // Wall-clock numbers live apart so the main artifact depends only on config and seed.
    result_.timings = timings_;
    json t = timings_;
    t["total"] = seconds;
    write(result_.scenario + ".timing.json", t);
    return result_;
  }

 private:
  void write(const std::string& file, const json& j) {
    std::ofstream out(fs::path(cfg_.output_dir) / file);
    if (!out) throw io_error("cannot write " + file);
    out << j.dump(2) << '\n';
  }

  const ExperimentConfig& cfg_;
  ScenarioResult result_;
  std::map<std::string, double> timings_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

FieldShape sine_shape(const ExperimentConfig& cfg, int modes, int components) {
  return {Basis::DirichletSine, cfg.length, modes, components};
}

// ---------------------------------------------------------------- gap-table

void run_gap_table(const ExperimentConfig& cfg, Recorder& rec) {
  const double L = cfg.length;
  const long double s = std::numbers::pi_v<long double> / L;
  auto t0 = std::chrono::steady_clock::now();
  double ratio_error = 0.0, difference_error = 0.0;
  for (int n = 1; n <= cfg.gap_table.arithmetic_n_max; ++n) {
    long double lo = s * s * n * n, hi = s * s * (n + 1.0L) * (n + 1.0L);
    long double diff = hi - lo;
    long double ratio = diff / (std::sqrt(lo) + std::sqrt(hi));
    ratio_error = std::max(ratio_error, double(std::abs((gap_ratio(n, L) - ratio) / ratio)));
    difference_error = std::max(difference_error, double(std::abs((gap_difference(n, L) - diff) / diff)));
  }
  rec.timing("arithmetic", seconds_since(t0));
  rec.check("gap_ratio_relative_error", ratio_error, "<=", 1e-14);
  rec.check("gap_difference_relative_error", difference_error, "<=", 1e-14);
  rec.metric("gap_ratio_n5", gap_ratio(5, L));
  rec.metric("gap_difference_n5", gap_difference(5, L));

  Nonlinearity nl = make_preset(cfg.nonlinearity, cfg.components);
  FieldShape shape = sine_shape(cfg, cfg.manifold.modes, nl.components);
  Rng rng(cfg.seed);
  auto pairs = lipschitz_pairs(shape, cfg.manifold.pair_radius_factor * cfg.manifold.cutoff_outer,
                               cfg.manifold.lipschitz_pairs, rng);
  const double safety = ChoiceOptions{}.safety;
  std::vector<Row> rows;
  for (int K : cfg.gap_table.K) {
    TransformedProblem tp{nl, K, {cfg.manifold.cutoff_inner, cfg.manifold.cutoff_outer}, {}};
    LipschitzReport lip = measure_transformed_lipschitz(tp, pairs, true, cfg.threads);
    for (int n = 1; n <= cfg.gap_table.n_max; ++n) {
      GapReport g = spectral_gap_check(n, L, safety * lip.L1, safety * lip.L2);
      rows.push_back({std::to_string(n), std::to_string(K), num(lip.L1), num(lip.L2), num(g.gap),
                      num(gap_ratio(n, L)), num(g.budget), g.transport_ok ? "1" : "0", g.source_ok ? "1" : "0",
                      g.pass ? "1" : "0"});
    }
  }
  rec.metric("safety_factor", safety);
  rec.table("table",
            {"n", "K", "L1", "L2", "gap_difference", "gap_ratio", "budget", "transport_ok", "source_ok", "pass"},
            rows);
}

// ---------------------------------------------------------------- roundtrip

Mat roundtrip_matrix(int m) {
  Mat A(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) A(i, j) = i == j ? 0.3 + 0.1 * i : (i < j ? 0.2 : -0.1);
  return A;
}

void run_roundtrip(const ExperimentConfig& cfg, Recorder& rec) {
  Nonlinearity nl = make_preset(cfg.nonlinearity, cfg.components);
  FieldShape shape = sine_shape(cfg, cfg.modes, nl.components);
  Rng rng(cfg.seed);
  std::vector<Row> rows;
  double worst = 0.0;
  for (int i = 0; i < cfg.roundtrip.samples; ++i) {
    double r = uniform(rng, 0.0, cfg.roundtrip.radius);
    Field v = random_smooth_field(shape, r, 4.0, rng);
    Field u = forward_map_U(v, cfg.roundtrip.K, nl);
    double dev = norm_h1(inverse_map_V(u, cfg.roundtrip.K, nl) - v);
    worst = std::max(worst, dev);
    rows.push_back({std::to_string(i), num(r), num(norm_h1(u)), num(dev)});
  }
  rec.table("samples", {"sample", "norm_v", "norm_U_v", "deviation"}, rows);
  rec.check("max_roundtrip_deviation", worst, "<=", 1e-8);

  // Constant coefficient: a(x) = exp(A x / 2) at u = 0, compared with Eigen's matrix exponential.
  const int m = nl.components;
  Mat A = roundtrip_matrix(m);
  Kernel k = solve_a_of_u(shape.zeros(), cfg.roundtrip.K, constant_matrix(A, 1.0));
  double expm_error = 0.0;
  for (size_t j = 0; j < k.a.value.size(); ++j) {
    double x = cfg.length * double(j) / k.a.intervals;
    Eigen::MatrixXd scaled_A = (0.5 * x) * Eigen::MatrixXd(A);
    Eigen::MatrixXd expected = scaled_A.exp();
    expm_error = std::max(expm_error, (Eigen::MatrixXd(k.a.value[j]) - expected).norm());
  }
  rec.check("constant_matrix_expm_error", expm_error, "<=", 1e-8);
}

// ---------------------------------------------------------------- k-scaling

void run_k_scaling(const ExperimentConfig& cfg, Recorder& rec) {
  const auto& ks = cfg.k_scaling;
  std::vector<std::pair<std::string, Nonlinearity>> presets;
  {
    ExperimentConfig::Preset p = cfg.nonlinearity;
    p.radius = ks.radius;
    if (p.name != "burgers-cutoff" && p.name != "coupled-2d-system")
      throw config_error("k-scaling needs the burgers-cutoff or coupled-2d-system preset");
    p.name = "burgers-cutoff";
    presets.push_back({p.name, make_preset(p, 1)});
    p.name = "coupled-2d-system";
    presets.push_back({p.name, make_preset(p, 2)});
  }
  std::vector<Row> rows;
  for (const auto& [name, nl] : presets) {
    FieldShape shape = sine_shape(cfg, ks.modes, nl.components);
    Rng rng(cfg.seed);
    auto pairs = lipschitz_pairs(shape, ks.pair_norm, ks.pairs, rng);
    auto ms = multiscale_pairs(shape, ks.pair_norm, ks.pairs, rng);
    pairs.insert(pairs.end(), ms.begin(), ms.end());
    std::vector<double> Ks, sup, L1;
    for (int K : ks.K) {
      // Cut-off radius above every sample, so phi = 1 on the pairs.
      TransformedProblem tp{nl, K, {2.0 * ks.pair_norm, 4.0 * ks.pair_norm}, {}};
      double s = 0.0;
      for (const auto& pr : pairs) s = std::max(s, sup_F1(pr.first, K, nl));
      LipschitzReport lip = measure_transformed_lipschitz(tp, pairs, false, cfg.threads);
      Ks.push_back(K);
      sup.push_back(s);
      L1.push_back(lip.L1);
      rows.push_back({name, std::to_string(K), num(s), num(lip.L1)});
    }
    double slope_sup = loglog_slope(Ks, sup), slope_L1 = loglog_slope(Ks, L1);
    rec.metric(name + ".slope_sup_F1", slope_sup);
    rec.metric(name + ".slope_L1", slope_L1);
    rec.check(name + ".slope_sup_F1_low", slope_sup, ">=", -0.65);
    rec.check(name + ".slope_sup_F1_high", slope_sup, "<=", -0.35);
    rec.check(name + ".slope_L1_low", slope_L1, ">=", -0.65);
    rec.check(name + ".slope_L1_high", slope_L1, "<=", -0.35);
  }
  rec.table("sweep", {"preset", "K", "sup_F1", "L1"}, rows);
}

// ---------------------------------------------------------------- resolvent

void run_resolvent(const ExperimentConfig& cfg, Recorder& rec) {
  const auto& rc = cfg.resolvent;
  FieldShape shape = sine_shape(cfg, rc.modes, 1);
  Eigen::VectorXd decay = eigenvalues_of(shape.zeros());
  std::vector<Row> rows;
  for (int n : rc.n) {
    if (n < 1 || n >= rc.modes) throw config_error("resolvent.n must lie in [1, resolvent.modes)");
    PerronConfig pc = make_perron_config(n, 0, cfg.length, rc.tolerance, rc.dt);
    Resolvent R(decay, pc.theta, pc.dt, pc.steps());
    ResolventNorms norms = resolvent_norms(R, n);
    std::string tag = "n" + std::to_string(n);
    rec.check(tag + ".phi_to_phi_over_bound", norms.phi_to_phi / norms.phi_bound, "<=", 1.05);
    rec.check(tag + ".l2_to_phi_over_bound", norms.l2_to_phi / norms.l2_bound, "<=", 1.05);
    rows.push_back({std::to_string(n), num(pc.theta), num(pc.dt), num(norms.phi_to_phi), num(norms.phi_bound),
                    num(norms.l2_to_phi), num(norms.l2_bound)});
  }
  rec.table("norms", {"n", "theta", "dt", "phi_to_phi", "phi_bound", "l2_to_phi", "l2_bound"}, rows);
}

// ---------------------------------------------------------------- desk case

struct Desk {
  Nonlinearity nl;
  FieldShape shape;
  TransformedProblem tp;
  int n = 0;
  GapReport gap;
  std::vector<LipschitzReport> sweep;
  PerronProblem problem;
  PerronConfig config;
  std::optional<Resolvent> resolvent;
};

Desk make_desk(const ExperimentConfig& cfg) {
  const auto& mc = cfg.manifold;
  Desk d;
  d.nl = make_preset(cfg.nonlinearity, cfg.components);
  d.shape = sine_shape(cfg, mc.modes, d.nl.components);
  CutoffSpec cutoff{mc.cutoff_inner, mc.cutoff_outer};
  Rng rng(cfg.seed);
  auto pairs = lipschitz_pairs(d.shape, mc.pair_radius_factor * mc.cutoff_outer, mc.lipschitz_pairs, rng);
  ChoiceOptions options;
  if (mc.K > 0 && mc.n > 0) {
    TransformedProblem tp{d.nl, mc.K, cutoff, {}};
    LipschitzReport lip = measure_transformed_lipschitz(tp, pairs, true, cfg.threads);
    d.sweep = {lip};
    d.n = mc.n;
    d.gap = spectral_gap_check(mc.n, cfg.length, options.safety * lip.L1, options.safety * lip.L2);
    d.gap.K = mc.K;
    d.tp = tp;
  } else {
    if (mc.K > 0) options.K_start = options.K_max = mc.K;
    if (mc.n > 0) options.n_min = mc.n;
    ParameterChoice ch = choose_parameters(d.nl, d.shape, cutoff, pairs, options);
    d.sweep = ch.sweep;
    d.n = ch.n;
    d.gap = ch.gap;
    d.tp = {d.nl, ch.K, cutoff, {}};
  }
  if (d.n * d.nl.components > 4)
    throw config_error("desk case needs n * components <= 4 to keep the base grid small");
  d.problem = transformed_perron_problem(d.shape, d.tp, d.n);
  d.config = make_perron_config(d.n, d.tp.K, cfg.length, mc.tolerance, mc.dt);
  d.resolvent.emplace(d.problem.decay, d.config.theta, d.config.dt, d.config.steps());
  return d;
}

void record_desk(const Desk& d, Recorder& rec) {
  rec.metric("K", d.tp.K);
  rec.metric("n", d.n);
  rec.metric("L1_with_safety", d.gap.L1);
  rec.metric("L2_with_safety", d.gap.L2);
  rec.metric("budget", d.gap.budget);
  rec.metric("theta", d.config.theta);
  rec.metric("perron_dt", d.config.dt);
  rec.metric("perron_horizon", d.config.horizon);
  std::vector<Row> rows;
  for (const auto& s : d.sweep) rows.push_back({std::to_string(s.K), num(s.L1), num(s.L2), std::to_string(s.samples)});
  rec.table("lipschitz", {"K", "L1", "L2", "samples"}, rows);
}

int iteration_bound(double rate, double tolerance) {
  return int(std::ceil(std::log(tolerance) / std::log(rate))) + 2;
}

ManifoldGraph build_desk_graph(const ExperimentConfig& cfg, const Desk& d, BuildReport& report) {
  const int base_dim = d.n * d.nl.components;
  auto bases = grid_bases(base_dim, cfg.manifold.extent, cfg.manifold.grid_points);
  return build_manifold(bases, d.problem, *d.resolvent, cfg.manifold.tolerance, d.config.max_iterations, &report);
}

void run_build_manifold(const ExperimentConfig& cfg, Recorder& rec) {
  Desk d = make_desk(cfg);
  record_desk(d, rec);
  rec.check("gap_condition", d.gap.pass ? 1.0 : 0.0, ">=", 1.0);
  rec.check("budget", d.gap.budget, "<=", ChoiceOptions{}.max_budget);
  BuildReport report;
  auto t0 = std::chrono::steady_clock::now();
  ManifoldGraph graph = build_desk_graph(cfg, d, report);
  rec.timing("build", seconds_since(t0));
  rec.timing("per_point", seconds_since(t0) / std::max(1, graph.size()));
  rec.check("max_contraction", report.max_contraction, "<=", d.gap.budget + 0.05);
  rec.check("max_iterations", report.max_iterations, "<=",
            iteration_bound(d.gap.budget + 0.05, cfg.manifold.tolerance));
  rec.metric("points", graph.size());

  std::vector<Row> points, steps;
  for (int i = 0; i < graph.size(); ++i) {
    const auto& r = report.solves[i];
    Row row{std::to_string(i)};
    for (int k = 0; k < graph.base_dimension(); ++k) row.push_back(num(graph.bases()[i](k)));
    row.push_back(num(d.problem.norm(graph.images()[i])));
    row.push_back(std::to_string(r.iterations));
    row.push_back(num(r.max_contraction));
    points.push_back(row);
    for (size_t j = 0; j < r.increments.size(); ++j)
      steps.push_back({std::to_string(i), std::to_string(j + 1), num(r.increments[j]),
                       j < r.contraction.size() ? num(r.contraction[j]) : ""});
  }
  Row header{"point"};
  for (int k = 0; k < graph.base_dimension(); ++k) header.push_back("base_" + std::to_string(k));
  for (const char* h : {"image_norm", "iterations", "max_contraction"}) header.push_back(h);
  rec.table("graph", header, points);
  rec.table("iterations", {"point", "iteration", "increment", "contraction"}, steps);
}

// ---------------------------------------------------------------- oracle

Eigen::MatrixXd symmetric_coupling(int d, double eps, Rng& rng) {
  Eigen::MatrixXd B(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) B(i, j) = B(j, i) = eps * uniform(rng, -1.0, 1.0);
  return B;
}

// dx/dt = -diag(lambda) x + B x on the first d sine modes.
PerronProblem linear_problem(const Eigen::VectorXd& decay, const Eigen::MatrixXd& B, int n) {
  PerronProblem p;
  p.decay = decay;
  p.norm_weight = (1.0 + decay.array()).matrix();
  for (int i = 0; i < n; ++i) p.low.push_back(i);
  p.forcing = [B](const Eigen::VectorXd& x) -> Eigen::VectorXd { return B * x; };
  return p;
}

// Graph of the invariant subspace of the n largest eigenvalues of -diag(lambda) + B.
Eigen::MatrixXd subspace_graph(const Eigen::VectorXd& decay, const Eigen::MatrixXd& B, int n) {
  const int d = static_cast<int>(B.rows());
  Eigen::MatrixXd A = B;
  A.diagonal() -= decay;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  Eigen::MatrixXd E = eig.eigenvectors().rightCols(n);
  return E.bottomRows(d - n) * E.topRows(n).inverse();
}

void run_oracle(const ExperimentConfig& cfg, Recorder& rec) {
  const auto& oc = cfg.oracle;
  if (oc.n < 1 || oc.n >= oc.modes) throw config_error("oracle.n must lie in [1, oracle.modes)");
  Rng rng(cfg.seed);
  Eigen::VectorXd decay = eigenvalues_of(sine_shape(cfg, oc.modes, 1).zeros());
  Eigen::MatrixXd B = symmetric_coupling(oc.modes, oc.coupling, rng);
  PerronProblem p = linear_problem(decay, B, oc.n);
  PerronConfig pc = make_perron_config(oc.n, 0, cfg.length, oc.tolerance, oc.dt);
  Resolvent R(p.decay, pc.theta, pc.dt, pc.steps());
  Eigen::MatrixXd graph = subspace_graph(decay, B, oc.n);
  GapReport gap = spectral_gap_check(oc.n, cfg.length, 0.0, B.operatorNorm());
  std::vector<Row> rows;
  double worst = 0.0, worst_contraction = 0.0;
  for (int t = 0; t < oc.trials; ++t) {
    Eigen::VectorXd base(oc.n);
    for (int i = 0; i < oc.n; ++i) base(i) = uniform(rng, -1.0, 1.0);
    PerronResult r = perron_solve(base, p, R, oc.tolerance, pc.max_iterations);
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(oc.modes);
    expected.tail(oc.modes - oc.n) = graph * base;
    double dev = p.norm(r.image - expected);
    worst = std::max(worst, dev);
    worst_contraction = std::max(worst_contraction, r.max_contraction);
    rows.push_back({std::to_string(t), num(base.norm()), num(dev), std::to_string(r.iterations),
                    num(r.max_contraction)});
  }
  rec.table("trials", {"trial", "base_norm", "deviation", "iterations", "max_contraction"}, rows);
  rec.metric("coupling_norm", B.operatorNorm());
  rec.metric("budget", gap.budget);
  rec.check("max_deviation", worst, "<=", 1e-8);
  rec.check("max_contraction", worst_contraction, "<=", gap.budget + 0.05);
}

// ---------------------------------------------------------------- tracking

std::vector<double> fit_floor_distances(std::vector<double> d, double floor) {
  for (double& x : d) x = std::max(x, floor);
  return d;
}

void run_tracking(const ExperimentConfig& cfg, Recorder& rec) {
  const auto& tc = cfg.tracking;
  Desk d = make_desk(cfg);
  record_desk(d, rec);
  ModalSystem system = transformed_system(d.shape, d.tp);
  const int stride = std::max(1, int(std::lround(tc.sample_every / tc.dt)));
  const double floor = 10.0 * tc.tolerance;
  const double required = 0.5 * d.config.theta;
  Rng rng(cfg.seed + 1);
  std::vector<Row> rows, fits;
  double worst_rate = INFINITY;
  for (int i = 0; i < tc.trajectories; ++i) {
    Field v0 = random_smooth_field(d.shape, tc.initial_norm, 4.0, rng);
    ModalTrajectory traj = evolve_modal(system, flatten(v0), tc.horizon, tc.dt, stride);
    auto dist = manifold_distance(traj.states, d.problem, *d.resolvent, tc.tolerance, d.config.max_iterations);
    TrackingFit fit = fit_tracking(traj.times, fit_floor_distances(dist, floor), floor);
    for (size_t j = 0; j < dist.size(); ++j) rows.push_back({std::to_string(i), num(traj.times[j]), num(dist[j])});
    fits.push_back({std::to_string(i), num(fit.rate), std::to_string(fit.window_begin),
                    std::to_string(fit.window_end), fit.degenerate ? "1" : "0"});
    double rate = fit.degenerate ? 0.0 : fit.rate;
    worst_rate = std::min(worst_rate, rate);
  }
  rec.table("distance", {"trajectory", "t", "distance"}, rows);
  rec.table("fit", {"trajectory", "rate", "window_begin", "window_end", "degenerate"}, fits);
  rec.metric("required_rate", required);
  rec.check("min_decay_rate", worst_rate, ">=", required);
}

// ---------------------------------------------------------------- invariance

void run_invariance(const ExperimentConfig& cfg, Recorder& rec) {
  Desk d = make_desk(cfg);
  record_desk(d, rec);
  BuildReport report;
  ManifoldGraph graph = build_desk_graph(cfg, d, report);
  InvarianceReport inv = invariance_residual(graph, d.problem, cfg.manifold.invariance_dt);
  rec.metric("max_residual", inv.max_residual);
  rec.check("max_relative_residual", inv.max_relative, "<=", 1e-3);
  rec.check("outside_points", inv.outside, "<=", 0);

  // Linear case, where the graph is a subspace and the residual only reflects the solver.
  Rng rng(cfg.seed);
  const int modes = 6, n = 1;
  Eigen::VectorXd decay = eigenvalues_of(sine_shape(cfg, modes, 1).zeros());
  PerronProblem lp = linear_problem(decay, symmetric_coupling(modes, 0.3, rng), n);
  PerronConfig pc = make_perron_config(n, 0, cfg.length, 1e-12, 1e-4);
  Resolvent R(lp.decay, pc.theta, pc.dt, pc.steps());
  ManifoldGraph linear = build_manifold(grid_bases(n, 1.0, 5), lp, R, 1e-12, pc.max_iterations);
  InvarianceReport linv = invariance_residual(linear, lp, cfg.manifold.invariance_dt);
  rec.check("linear_max_relative_residual", linv.max_relative, "<=", 1e-6);
  rec.check("linear_outside_points", linv.outside, "<=", 0);
}

// ---------------------------------------------------------------- equivalence

void run_equivalence(const ExperimentConfig& cfg, Recorder& rec) {
  const auto& ec = cfg.equivalence;
  Nonlinearity nl = make_preset(cfg.nonlinearity, cfg.components);
  FieldShape shape = sine_shape(cfg, cfg.modes, nl.components);
  Rng rng(cfg.seed);
  Field u0 = random_smooth_field(shape, ec.initial_norm, ec.bandwidth, rng);
  TransformedProblem tp{nl, ec.K, {ec.cutoff_inner, ec.cutoff_outer}, {}};
  auto run = [&](double dt) {
    return equivalence_check(u0, tp, ec.horizon, dt, std::max(1, int(std::lround(ec.record_every / dt))));
  };
  EquivalenceReport coarse = run(ec.dt), fine = run(0.5 * ec.dt);
  std::vector<Row> rows;
  for (size_t i = 0; i < coarse.times.size() && i < fine.times.size(); ++i)
    rows.push_back({num(coarse.times[i]), num(coarse.deviation[i]), num(fine.deviation[i])});
  rec.table("deviation", {"t", "deviation_dt", "deviation_half_dt"}, rows);
  rec.metric("max_deviation_half_dt", fine.max_deviation);
  rec.check("max_deviation", coarse.max_deviation, "<=", 1e-5);
  double ratio = coarse.max_deviation / fine.max_deviation;
  rec.check("halving_ratio_low", ratio, ">=", 1.8);
  rec.check("halving_ratio_high", ratio, "<=", 2.2);
}

// ---------------------------------------------------------------- upsilon-audit

void run_upsilon(const ExperimentConfig& cfg, Recorder& rec) {
  const auto& uc = cfg.upsilon;
  GradientNonlinearity gnl = gradient_nonlinearity(cfg.nonlinearity.general, cfg.nonlinearity.radius);
  EllipticConfig ecfg = make_elliptic_config(gnl, uc.shift_factor);
  FieldShape shape = sine_shape(cfg, uc.modes, 1);
  Rng rng(cfg.seed);
  double worst_ratio = 0.0, worst_residual = 0.0;
  int worst_iterations = 0;
  std::vector<Row> rows;
  for (int i = 0; i < uc.pairs; ++i) {
    double r1 = uniform(rng, 0.0, uc.max_data_norm);
    Field h1 = random_smooth_field(shape, r1, 4.0, rng);
    // Second member: a nearby perturbation or an independent sample.
    Field h2 = i % 2 == 0 ? h1 + random_smooth_field(shape, uniform(rng, 1e-3, 1.0), 6.0, rng)
                          : random_smooth_field(shape, uniform(rng, 0.0, uc.max_data_norm), 4.0, rng);
    EllipticSolution y1 = solve_elliptic(h1, ecfg, gnl), y2 = solve_elliptic(h2, ecfg, gnl);
    double dh = norm_l2(h1 - h2), dy = norm_h1(y1.y - y2.y);
    double ratio = dy / dh;
    worst_ratio = std::max(worst_ratio, ratio);
    worst_residual = std::max({worst_residual, y1.residual, y2.residual});
    worst_iterations = std::max({worst_iterations, y1.iterations, y2.iterations});
    rows.push_back({std::to_string(i), num(dh), num(dy), num(ratio), num(std::max(y1.residual, y2.residual)),
                    std::to_string(std::max(y1.iterations, y2.iterations))});
  }
  rec.table("pairs", {"pair", "data_distance_l2", "solution_distance_h1", "ratio", "residual", "iterations"}, rows);
  rec.metric("shift", ecfg.shift);
  rec.metric("threshold", ecfg.threshold);
  rec.metric("max_ratio", worst_ratio);
  rec.check("stability_ratio", worst_ratio, "<=", 1.0);
  rec.check("max_residual", worst_residual, "<=", ecfg.tolerance);
  rec.check("max_newton_iterations", worst_iterations, "<=", ecfg.max_iterations);
}

// ---------------------------------------------------------------- neumann-pipeline

void run_neumann(const ExperimentConfig& cfg, Recorder& rec) {
  const auto& nc = cfg.neumann;
  const auto& tc = cfg.tracking;
  Nonlinearity nl = make_preset(cfg.nonlinearity, cfg.components);
  const int m = nl.components;
  FieldShape cosine{Basis::NeumannCosine, cfg.length, nc.modes, m};
  FieldShape sine = sine_shape(cfg, nc.modes, m);
  ExtendedState like{cosine.zeros(), sine.zeros(), std::nullopt};
  Rng rng(cfg.seed);

  // Constraint drift of the differentiated system.
  Field u0 = random_smooth_field(cosine, nc.drift_norm, 4.0, rng);
  int drift_stride = std::max(1, int(std::lround(0.1 / nc.drift_dt)));
  DriftReport drift = constraint_drift(u0, nl, nc.joint_radius, nc.drift_horizon, nc.drift_dt, drift_stride);
  std::vector<Row> drift_rows;
  for (size_t i = 0; i < drift.times.size(); ++i) drift_rows.push_back({num(drift.times[i]), num(drift.drift[i])});
  rec.table("drift", {"t", "constraint_gap"}, drift_rows);
  rec.metric("drift_max", drift.max_drift);
  rec.check("drift_slope", std::abs(drift.slope), "<=", nc.drift_constant * nc.drift_dt);

  // Gap condition on the transformed system.
  NeumannProblem problem{nl, nc.K, {nc.cutoff_inner, nc.cutoff_outer}, nc.joint_radius};
  auto pairs = neumann_pairs(like, cfg.manifold.pair_radius_factor * nc.cutoff_outer, cfg.manifold.lipschitz_pairs, rng);
  LipschitzReport lip = measure_neumann_lipschitz(problem, pairs);
  const ChoiceOptions options;
  int n = nc.n;
  GapReport gap;
  if (n > 0) {
    gap = neumann_gap_check(n, cfg.length, options.safety * lip.L1, options.safety * lip.L2);
  } else {
    for (n = 1; n < nc.modes / 2; ++n) {
      gap = neumann_gap_check(n, cfg.length, options.safety * lip.L1, options.safety * lip.L2);
      if (gap.pass && gap.budget <= options.max_budget) break;
    }
  }
  rec.metric("L1", lip.L1);
  rec.metric("L2", lip.L2);
  rec.metric("n", n);
  rec.metric("budget", gap.budget);
  rec.check("gap_condition", gap.pass ? 1.0 : 0.0, ">=", 1.0);
  rec.check("budget", gap.budget, "<=", options.max_budget);

  // Tracking of off-manifold data.
  PerronProblem perron = neumann_perron_problem(like, problem, n);
  PerronConfig pc = neumann_perron_config(n, cfg.length, cfg.manifold.tolerance, cfg.manifold.dt);
  Resolvent R(perron.decay, pc.theta, pc.dt, pc.steps());
  ModalSystem system = neumann_transformed_system(like, problem);
  const int stride = std::max(1, int(std::lround(tc.sample_every / tc.dt)));
  const double floor = 10.0 * tc.tolerance;
  double worst_rate = INFINITY;
  std::vector<Row> rows;
  for (int i = 0; i < tc.trajectories; ++i) {
    ExtendedState x0{random_smooth_field(cosine, tc.initial_norm, 4.0, rng),
                     random_smooth_field(sine, tc.initial_norm, 4.0, rng), std::nullopt};
    ModalTrajectory traj = evolve_modal(system, pack(x0), tc.horizon, tc.dt, stride);
    auto dist = manifold_distance(traj.states, perron, R, tc.tolerance, pc.max_iterations);
    TrackingFit fit = fit_tracking(traj.times, fit_floor_distances(dist, floor), floor);
    for (size_t j = 0; j < dist.size(); ++j) rows.push_back({std::to_string(i), num(traj.times[j]), num(dist[j])});
    worst_rate = std::min(worst_rate, fit.degenerate ? 0.0 : fit.rate);
  }
  rec.table("tracking", {"trajectory", "t", "distance"}, rows);
  rec.metric("theta", pc.theta);
  rec.check("min_decay_rate", worst_rate, ">=", 0.5 * pc.theta);

  // The embedding u -> (u, du/dx) is bi-Lipschitz on sampled attractor points.
  std::vector<Field> samples;
  for (int i = 0; i < nc.audit_trajectories; ++i) {
    Field start = random_smooth_field(cosine, nc.drift_norm, 4.0, rng);
    StepOptions so;
    so.stride = 50;
    Trajectory traj = evolve_neumann(start, 2.0, 1e-2, nl, so);
    samples.insert(samples.end(), traj.states.begin(), traj.states.end());
  }
  EmbeddingAudit audit = embedding_audit(samples);
  rec.metric("embedding_max_ratio", audit.max_ratio);
  rec.check("embedding_min_ratio", audit.min_ratio, ">=", 1.0 - 1e-12);
}

// ---------------------------------------------------------------- dissipativity

void run_dissipativity(const ExperimentConfig& cfg, Recorder& rec) {
  const auto& dc = cfg.dissipativity;
  Nonlinearity nl = make_preset(cfg.nonlinearity, cfg.components);
  FieldShape shape = sine_shape(cfg, dc.modes, nl.components);
  Rng rng(cfg.seed);
  AbsorbingBall ball =
      measure_absorbing_ball(nl, shape, dc.trajectories, dc.initial_norm, 0.1 * dc.horizon, dc.horizon, dc.dt, rng, 100);
  int admissible = 0;
  std::vector<Row> rows;
  for (size_t i = 0; i < ball.trajectories.size(); ++i) {
    DissipativeReport r = dissipative_monitor(ball.trajectories[i]);
    if (r.ok && r.violations == 0) ++admissible;
    rows.push_back({std::to_string(i), num(r.C), num(r.alpha), num(r.C_star), std::to_string(r.violations),
                    num(r.integrated_bound), r.ok ? "1" : "0"});
  }
  rec.table("monitor", {"trajectory", "C", "alpha", "C_star", "violations", "integrated_bound", "ok"}, rows);
  rec.metric("absorbing_radius", ball.radius);
  rec.metric("sup_norm", ball.sup_norm);
  rec.check("admissible_trajectories", admissible, ">=", dc.trajectories);
}

void require_matrix_preset(const ExperimentConfig& cfg) {
  if (cfg.nonlinearity.name == "general-f(u,ux)")
    throw config_error("preset general-f(u,ux) only drives the upsilon-audit scenario");
}

}  // namespace

bool ScenarioResult::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

ExperimentConfig parse_config(const std::string& yaml_text, bool validate) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw config_error(std::string("invalid YAML: ") + e.what());
  }
  ExperimentConfig cfg;
  if (root.IsNull()) {
    if (validate) validate_config(cfg);
    return cfg;
  }
  if (!root.IsMap()) throw config_error("config must be a mapping");
  YamlReader reader(root);
  visit_config(cfg, reader);
  reader.finish();
  if (validate) validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate_config(const ExperimentConfig& cfg) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw config_error(what);
  };
  require(cfg.scenario == "all" || std::count(scenario_names().begin(), scenario_names().end(), cfg.scenario),
          "unknown scenario '" + cfg.scenario + "'");
  require(cfg.length > 0.0, "length must be positive");
  require(cfg.components >= 1 && cfg.components <= kMaxComponents, "components must lie in [1, 6]");
  require(cfg.modes >= 4, "modes must be at least 4");
  require(!cfg.output_dir.empty(), "output_dir must not be empty");
  const auto& p = cfg.nonlinearity;
  require(p.radius > 0.0, "nonlinearity.radius must be positive");
  if (p.name == "burgers-cutoff") require(cfg.components == 1, "burgers-cutoff has one component");
  else if (p.name == "coupled-2d-system") require(cfg.components == 2, "coupled-2d-system has two components");
  else if (p.name == "general-f(u,ux)") require(cfg.components == 1, "general-f(u,ux) has one component");
  else require(p.name == "zero", "unknown nonlinearity preset '" + p.name + "'");
  const auto& mc = cfg.manifold;
  require(mc.modes >= 4 && mc.K >= 0 && mc.n >= 0, "manifold.modes >= 4, manifold.K and manifold.n >= 0");
  require(mc.cutoff_inner > 0.0 && mc.cutoff_outer > mc.cutoff_inner, "manifold cut-off needs 0 < inner < outer");
  require(mc.pair_radius_factor > 0.0 && mc.lipschitz_pairs >= 1, "manifold pair sampling must be positive");
  require(mc.tolerance > 0.0 && mc.dt >= 0.0 && mc.extent > 0.0 && mc.grid_points >= 2 && mc.invariance_dt > 0.0,
          "manifold tolerances, extent and grid must be positive");
  require(cfg.roundtrip.samples >= 1 && cfg.roundtrip.radius > 0.0 && cfg.roundtrip.K >= 1,
          "roundtrip settings must be positive");
  const auto& ks = cfg.k_scaling;
  require(ks.modes >= 8 && ks.K.size() >= 2 && ks.radius > 0.0 && ks.pair_norm > 0.0 && ks.pairs >= 1,
          "k_scaling needs at least two K values and positive settings");
  for (int K : ks.K) require(K >= 1 && K <= ks.modes, "k_scaling.K values must lie in [1, k_scaling.modes]");
  require(cfg.gap_table.n_max >= 1 && cfg.gap_table.arithmetic_n_max >= 1, "gap_table ranges must be positive");
  for (int K : cfg.gap_table.K) require(K >= 1, "gap_table.K values must be positive");
  require(cfg.resolvent.modes >= 2 && cfg.resolvent.tolerance > 0.0 && cfg.resolvent.dt >= 0.0,
          "resolvent settings must be positive");
  require(cfg.oracle.trials >= 1 && cfg.oracle.tolerance > 0.0 && cfg.oracle.dt >= 0.0, "oracle settings must be positive");
  const auto& tc = cfg.tracking;
  require(tc.trajectories >= 1 && tc.initial_norm > 0.0 && tc.horizon > 0.0 && tc.dt > 0.0 &&
              tc.sample_every >= tc.dt && tc.tolerance > 0.0,
          "tracking settings must be positive, sample_every >= dt");
  const auto& ec = cfg.equivalence;
  require(ec.initial_norm > 0.0 && ec.bandwidth > 0.0 && ec.horizon > 0.0 && ec.dt > 0.0 &&
              ec.record_every >= ec.dt && ec.K >= 1,
          "equivalence settings must be positive, record_every >= dt");
  require(ec.cutoff_inner > 0.0 && ec.cutoff_outer > ec.cutoff_inner, "equivalence cut-off needs 0 < inner < outer");
  const auto& uc = cfg.upsilon;
  require(uc.modes >= 4 && uc.pairs >= 1 && uc.shift_factor > 0.0 && uc.max_data_norm > 0.0,
          "upsilon settings must be positive");
  const auto& nc = cfg.neumann;
  require(nc.modes >= 8 && nc.K >= 1 && nc.n >= 0, "neumann.modes >= 8, neumann.K >= 1, neumann.n >= 0");
  require(nc.cutoff_inner > 0.0 && nc.cutoff_outer > nc.cutoff_inner, "neumann cut-off needs 0 < inner < outer");
  require(nc.joint_radius > 0.0 && nc.drift_norm > 0.0 && nc.drift_horizon > 0.0 && nc.drift_dt > 0.0 &&
              nc.drift_constant > 0.0 && nc.audit_trajectories >= 1,
          "neumann settings must be positive");
  const auto& dc = cfg.dissipativity;
  require(dc.trajectories >= 1 && dc.initial_norm > 0.0 && dc.horizon > 0.0 && dc.dt > 0.0 && dc.modes >= 4,
          "dissipativity settings must be positive");
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, criterion] : scenario_table()) out.push_back(name);
    return out;
  }();
  return names;
}

int scenario_criterion(const std::string& scenario) {
  for (const auto& [name, criterion] : scenario_table())
    if (name == scenario) return criterion;
  throw config_error("unknown scenario '" + scenario + "'");
}

std::vector<std::string> expand_scenarios(const std::string& scenario) {
  if (scenario == "all") return scenario_names();
  scenario_criterion(scenario);
  return {scenario};
}

Nonlinearity make_preset(const ExperimentConfig::Preset& preset, int components) {
  if (preset.name == "zero") return zero_nonlinearity(components);
  if (preset.name == "burgers-cutoff") return burgers_cutoff(preset.strength, preset.reaction, preset.radius);
  if (preset.name == "coupled-2d-system") return coupled_2d(preset.strength, preset.rotation, preset.radius);
  if (preset.name == "general-f(u,ux)")
    throw config_error("preset general-f(u,ux) depends on du/dx and has no matrix form; only upsilon-audit uses it");
  throw config_error("unknown nonlinearity preset '" + preset.name + "'");
}

ScenarioResult run_scenario(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (cfg.scenario == "all") throw config_error("run_scenario takes a single scenario; expand 'all' first");
  const std::string& s = cfg.scenario;
  if (s != "upsilon-audit" && s != "resolvent" && s != "oracle") require_matrix_preset(cfg);
  Recorder rec(cfg, s);
  auto t0 = std::chrono::steady_clock::now();
  if (s == "gap-table") run_gap_table(cfg, rec);
  else if (s == "roundtrip") run_roundtrip(cfg, rec);
  else if (s == "k-scaling") run_k_scaling(cfg, rec);
  else if (s == "resolvent") run_resolvent(cfg, rec);
  else if (s == "build-manifold") run_build_manifold(cfg, rec);
  else if (s == "oracle") run_oracle(cfg, rec);
  else if (s == "tracking") run_tracking(cfg, rec);
  else if (s == "invariance") run_invariance(cfg, rec);
  else if (s == "equivalence") run_equivalence(cfg, rec);
  else if (s == "upsilon-audit") run_upsilon(cfg, rec);
  else if (s == "neumann-pipeline") run_neumann(cfg, rec);
  else if (s == "dissipativity") run_dissipativity(cfg, rec);
  return rec.finish(seconds_since(t0));
}

void write_error_record(const std::string& dir, const std::string& scenario, const std::string& kind,
                        const std::string& message) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) return;
  json j{{"scenario", scenario}, {"kind", kind}, {"message", message}};
  std::ofstream out(fs::path(dir) / ((scenario.empty() ? std::string("run") : scenario) + ".error.json"));
  if (out) out << j.dump(2) << '\n';
}

std::string emit_report(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw io_error("no such directory '" + dir + "'");
  std::map<int, json> found;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::string name = path.filename().string();
    if (path.extension() != ".json") continue;
    if (name.ends_with(".timing.json") || name.ends_with(".error.json")) continue;
    std::ifstream in(path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw io_error("cannot parse " + name + ": " + e.what());
    }
    if (!j.contains("scenario") || !j.contains("criterion") || !j.contains("checks")) continue;
    found[j["criterion"].get<int>()] = j;
  }

  std::ostringstream out;
  out << "# imlab report\n\n";
  out << "| criterion | scenario | status | checks passed | seed |\n";
  out << "|---|---|---|---|---|\n";
  if (!found.empty()) {
    for (const auto& [name, criterion] : scenario_table()) {
      auto it = found.find(criterion);
      if (it == found.end()) {
        out << "| " << criterion << " | " << name << " | SKIPPED | - | - |\n";
        continue;
      }
      const json& j = it->second;
      int passed = 0, total = 0;
      for (const auto& c : j["checks"]) {
        ++total;
        passed += c["pass"].get<bool>() ? 1 : 0;
      }
      out << "| " << criterion << " | " << name << " | " << (passed == total ? "PASS" : "FAIL") << " | " << passed
          << "/" << total << " | " << j["seed"].get<std::uint64_t>() << " |\n";
    }
  }
  for (const auto& [criterion, j] : found) {
    out << "\n## " << criterion << " " << j["scenario"].get<std::string>() << "\n\n";
    out << "| check | value | relation | threshold | result |\n|---|---|---|---|---|\n";
    for (const auto& c : j["checks"]) {
      double value = c["value"].is_number() ? c["value"].get<double>() : NAN;
      out << "| " << c["name"].get<std::string>() << " | " << short_num(value) << " | "
          << c["relation"].get<std::string>() << " | " << short_num(c["threshold"].get<double>()) << " | "
          << (c["pass"].get<bool>() ? "pass" : "fail") << " |\n";
    }
  }
  return out.str();
}

}  // namespace imlab
