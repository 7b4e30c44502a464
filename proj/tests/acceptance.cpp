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

// Acceptance run: one PASS/FAIL line per criterion. Thresholds below are fixed here and
// evaluated against the values each scenario reports, independently of its own checks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "imlab/error.hpp"
#include "imlab/lab.hpp"

using namespace imlab;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void at_most(const std::string& what, double value, double limit) { record(what, value, "<=", limit, value <= limit); }
  void at_least(const std::string& what, double value, double limit) {
    record(what, value, ">=", limit, value >= limit);
  }

 private:
  void record(const std::string& what, double value, const char* rel, double limit, bool ok) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s%s %.4g %s %.4g", detail.tellp() > 0 ? "; " : "", what.c_str(), value, rel,
                  limit);
    detail << buf << (ok ? "" : " (violated)");
    pass = pass && ok;
  }
};

double check_value(const ScenarioResult& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return c.value;
  throw consistency_error(r.scenario + " did not report " + name);
}

double metric(const ScenarioResult& r, const std::string& name) {
  auto it = r.metrics.find(name);
  if (it == r.metrics.end()) throw consistency_error(r.scenario + " did not report metric " + name);
  return it->second;
}

struct Criterion {
  int id;
  std::string title;
  double time_limit;  // seconds
  std::string timed_phase;  // empty: the whole scenario
  std::function<ExperimentConfig(ExperimentConfig)> configure;
  std::function<void(const ScenarioResult&, Verdict&)> judge;
};

ExperimentConfig base_config(const fs::path& out, const std::string& scenario) {
  ExperimentConfig cfg;
  cfg.scenario = scenario;
  cfg.output_dir = out.string();
  cfg.seed = 20260101;
  return cfg;
}

std::vector<Criterion> criteria() {
  std::vector<Criterion> list;
  list.push_back({1, "spectral arithmetic", 1.0, "arithmetic",
                  [](ExperimentConfig c) {
                    c.scenario = "gap-table";
                    c.gap_table.arithmetic_n_max = 10000;
                    return c;
                  },
                  [](const ScenarioResult& r, Verdict& v) {
                    v.at_most("gap_ratio rel err", check_value(r, "gap_ratio_relative_error"), 1e-14);
                    v.at_most("gap_difference rel err", check_value(r, "gap_difference_relative_error"), 1e-14);
                  }});
  list.push_back({2, "diffeomorphism roundtrip (m = 2, N = 128)", 30.0, "",
                  [](ExperimentConfig c) {
                    c.scenario = "roundtrip";
                    c.nonlinearity.name = "coupled-2d-system";
                    c.components = 2;
                    c.modes = 128;
                    c.roundtrip.samples = 20;
                    return c;
                  },
                  [](const ScenarioResult& r, Verdict& v) {
                    v.at_most("max |V(U(v)) - v|", check_value(r, "max_roundtrip_deviation"), 1e-8);
                    v.at_most("exp(Ax/2) error", check_value(r, "constant_matrix_expm_error"), 1e-8);
                  }});
  list.push_back({3, "K-scaling slopes", 300.0, "",
                  [](ExperimentConfig c) {
                    c.scenario = "k-scaling";
                    c.k_scaling.K = {8, 16, 32, 64, 128};
                    return c;
                  },
                  [](const ScenarioResult& r, Verdict& v) {
                    for (std::string p : {"burgers-cutoff", "coupled-2d-system"})
                      for (std::string q : {"slope_sup_F1", "slope_L1"}) {
                        double s = metric(r, p + "." + q);
                        v.at_least(p + " " + q, s, -0.65);
                        v.at_most(p + " " + q, s, -0.35);
                      }
                  }});
  list.push_back({4, "resolvent bounds", 60.0, "",
                  [](ExperimentConfig c) {
                    c.scenario = "resolvent";
                    c.resolvent.n = {3, 5, 8};
                    return c;
                  },
                  [](const ScenarioResult& r, Verdict& v) {
                    for (int n : {3, 5, 8}) {
                      std::string tag = "n" + std::to_string(n);
                      v.at_most(tag + " phi->phi / bound", check_value(r, tag + ".phi_to_phi_over_bound"), 1.05);
                      v.at_most(tag + " L2->phi / bound", check_value(r, tag + ".l2_to_phi_over_bound"), 1.05);
                    }
                  }});
  list.push_back({5, "Perron contraction", 300.0, "",
                  [](ExperimentConfig c) {
                    c.scenario = "build-manifold";
                    c.manifold.tolerance = 1e-9;
                    return c;
                  },
                  [](const ScenarioResult& r, Verdict& v) {
                    double budget = metric(r, "budget");
                    v.at_most("budget", budget, 0.5);
                    v.at_most("max contraction", check_value(r, "max_contraction"), budget + 0.05);
                    double bound = std::ceil(std::log(1e-9) / std::log(budget + 0.05)) + 2;
                    v.at_most("iterations", check_value(r, "max_iterations"), bound);
                    v.at_most("seconds per point", r.seconds / metric(r, "points"), 300.0);
                  }});
  list.push_back({6, "linear oracle (6 modes)", 10.0, "",
                  [](ExperimentConfig c) {
                    c.scenario = "oracle";
                    c.oracle.modes = 6;
                    return c;
                  },
                  [](const ScenarioResult& r, Verdict& v) {
                    v.at_most("graph vs eigen-subspace", check_value(r, "max_deviation"), 1e-8);
                  }});
  list.push_back({7, "exponential tracking (desk, N = 128)", 600.0, "",
                  [](ExperimentConfig c) {
                    c.scenario = "tracking";
                    c.manifold.modes = 128;
                    c.tracking.trajectories = 5;
                    return c;
                  },
                  [](const ScenarioResult& r, Verdict& v) {
                    v.at_least("min decay rate", check_value(r, "min_decay_rate"), 0.5 * metric(r, "theta"));
                  }});
  list.push_back({8, "invariance", 300.0, "",
                  [](ExperimentConfig c) {
                    c.scenario = "invariance";
                    return c;
                  },
                  [](const ScenarioResult& r, Verdict& v) {
                    v.at_most("relative residual", check_value(r, "max_relative_residual"), 1e-3);
                    v.at_most("outside points", check_value(r, "outside_points"), 0.0);
                    v.at_most("linear relative residual", check_value(r, "linear_max_relative_residual"), 1e-6);
                  }});
  list.push_back({9, "equivalence of flows", 120.0, "",
                  [](ExperimentConfig c) {
                    c.scenario = "equivalence";
                    c.equivalence.horizon = 5.0;
                    c.equivalence.dt = 1e-3;
                    return c;
                  },
                  [](const ScenarioResult& r, Verdict& v) {
                    v.at_most("max deviation", check_value(r, "max_deviation"), 1e-5);
                    double ratio = check_value(r, "halving_ratio_low");
                    v.at_least("dt halving ratio", ratio, 1.8);
                    v.at_most("dt halving ratio", ratio, 2.2);
                  }});
  list.push_back({10, "elliptic lift", 60.0, "",
                  [](ExperimentConfig c) {
                    c.scenario = "upsilon-audit";
                    c.nonlinearity.name = "general-f(u,ux)";
                    c.upsilon.pairs = 100;
                    return c;
                  },
                  [](const ScenarioResult& r, Verdict& v) {
                    v.at_most("residual", check_value(r, "max_residual"), 1e-10);
                    v.at_most("stability ratio", check_value(r, "stability_ratio"), 1.0);
                  }});
  list.push_back({11, "Neumann pipeline", 900.0, "",
                  [](ExperimentConfig c) {
                    c.scenario = "neumann-pipeline";
                    c.neumann.drift_horizon = 10.0;
                    return c;
                  },
                  [](const ScenarioResult& r, Verdict& v) {
                    v.at_most("|drift slope|", check_value(r, "drift_slope"), 1.0 * 1e-3);
                    v.at_least("min decay rate", check_value(r, "min_decay_rate"), 0.5 * metric(r, "theta"));
                  }});
  list.push_back({12, "dissipativity", 300.0, "",
                  [](ExperimentConfig c) {
                    c.scenario = "dissipativity";
                    c.dissipativity.trajectories = 10;
                    c.dissipativity.initial_norm = 10.0;
                    return c;
                  },
                  [](const ScenarioResult& r, Verdict& v) {
                    v.at_least("admissible trajectories", check_value(r, "admissible_trajectories"), 10.0);
                  }});
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path out = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "imlab_acceptance";
  int failures = 0;
  for (const auto& c : criteria()) {
    Verdict v;
    double seconds = 0.0;
    try {
      ExperimentConfig cfg = c.configure(base_config(out, ""));
      auto t0 = std::chrono::steady_clock::now();
      ScenarioResult r = run_scenario(cfg);
      seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      c.judge(r, v);
      if (c.timed_phase.empty()) {
        v.at_most("runtime s", seconds, c.time_limit);
      } else {
        v.at_most(c.timed_phase + " runtime s", r.timings.at(c.timed_phase), c.time_limit);
        char buf[64];
        std::snprintf(buf, sizeof buf, "; scenario total %.3g s", seconds);
        v.detail << buf;
      }
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "error: " << e.what();
    }
    failures += v.pass ? 0 : 1;
    std::printf("%s criterion %2d %s: %s\n", v.pass ? "PASS" : "FAIL", c.id, c.title.c_str(), v.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
