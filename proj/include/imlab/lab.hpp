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
#include <map>
#include <string>
#include <vector>

#include "imlab/neumann.hpp"

namespace imlab {

// Every field has a default; config/defaults.yaml lists them with the same names.
struct ExperimentConfig {
  std::string scenario = "roundtrip";
  std::uint64_t seed = 20260101;
  std::string output_dir = "out";
  int threads = 0;  // 0: hardware concurrency

  struct Preset {
    std::string name = "burgers-cutoff";  // zero | burgers-cutoff | coupled-2d-system | general-f(u,ux)
    double strength = 1.0;
    double reaction = 0.0;
    double rotation = 0.0;
    double radius = 1.0;
    QuadraticCoefficients general{0.3, 0.5, -0.4, 0.7, 1.0, 0.6};
  } nonlinearity;

  double length = 3.141592653589793;
  int components = 1;
  int modes = 128;

  // Desk case shared by build-manifold, tracking and invariance.
  struct Manifold {
    int modes = 128;
    int K = 0;  // 0: chosen from measured Lipschitz constants
    int n = 0;
    double cutoff_inner = 0.15;
    double cutoff_outer = 0.3;
    double pair_radius_factor = 1.25;  // pairs are drawn up to this times cutoff_outer
    int lipschitz_pairs = 200;
    double tolerance = 1e-9;
    double dt = 0.0;  // Perron time step, 0: automatic
    double extent = 0.2;  // base grid half-width
    int grid_points = 9;  // per base axis
    double invariance_dt = 1e-3;
  } manifold;

  struct Roundtrip {
    int samples = 20;
    double radius = 1.0;
    int K = 16;
  } roundtrip;

  struct KScaling {
    int modes = 1024;
    std::vector<int> K{8, 16, 32, 64, 128};
    double radius = 2.0;  // preset cut-off radius for this sweep
    double pair_norm = 1.0;
    int pairs = 250;  // random pairs, plus as many multi-scale pairs
  } k_scaling;

  struct GapTable {
    int n_max = 10;
    std::vector<int> K{4, 8, 16, 32};
    int arithmetic_n_max = 10000;
  } gap_table;

  struct Resolvent {
    std::vector<int> n{3, 5, 8};
    int modes = 16;
    double tolerance = 1e-9;
    double dt = 0.0;  // 0: automatic
  } resolvent;

  struct Oracle {
    int modes = 6;
    int n = 2;
    double coupling = 0.4;
    int trials = 3;
    double tolerance = 1e-12;
    double dt = 5e-5;
  } oracle;

  struct Tracking {
    int trajectories = 5;
    double initial_norm = 0.1;
    double horizon = 6.0;
    double dt = 1e-3;
    double sample_every = 0.25;
    double tolerance = 1e-12;  // Perron solves; distances below 10x this are treated as zero
  } tracking;

  struct Equivalence {
    double initial_norm = 0.2;
    double bandwidth = 2.0;
    double horizon = 5.0;
    double dt = 1e-3;
    double record_every = 0.01;
    int K = 16;
    // The cut-off has to stay inactive along the run for the two flows to coincide.
    double cutoff_inner = 5.0;
    double cutoff_outer = 10.0;
  } equivalence;

  struct Upsilon {
    int modes = 64;
    int pairs = 100;
    double shift_factor = 2.0;
    double max_data_norm = 20.0;
  } upsilon;

  struct Neumann {
    int modes = 32;
    int K = 4;
    int n = 0;  // 0: smallest n passing the gap check
    double cutoff_inner = 0.15;
    double cutoff_outer = 0.3;
    double joint_radius = 1.0;
    double drift_norm = 0.4;
    double drift_horizon = 10.0;
    double drift_dt = 1e-3;
    double drift_constant = 1.0;  // drift slope must stay below this times dt
    int audit_trajectories = 3;
  } neumann;

  struct Dissipativity {
    int trajectories = 10;
    double initial_norm = 10.0;
    double horizon = 50.0;
    double dt = 1e-3;
    int modes = 64;
  } dissipativity;
};

// Loads a YAML file over the defaults. Unknown keys and ill-typed values are configuration errors;
// with 'validate' the value ranges and preset consistency are checked as well.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& yaml_text, bool validate = true);
void validate_config(const ExperimentConfig& cfg);

const std::vector<std::string>& scenario_names();
// Acceptance criterion number covered by a scenario (1..12).
int scenario_criterion(const std::string& scenario);

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  // "<=", ">=", "<", ">"
  bool pass = false;
};

struct ScenarioResult {
  std::string scenario;
  int criterion = 0;
  std::uint64_t seed = 0;
  std::vector<Check> checks;
  std::map<std::string, double> metrics;
  std::vector<std::string> artifacts;
  double seconds = 0.0;
  std::map<std::string, double> timings;  // wall-clock phases, also in <scenario>.timing.json

  bool pass() const;
};

// Runs one scenario and writes its artifacts into cfg.output_dir.
ScenarioResult run_scenario(const ExperimentConfig& cfg);
// "all" expands to scenario_names(), anything else to itself.
std::vector<std::string> expand_scenarios(const std::string& scenario);
// Structured record of a failed run, written as <scenario>.error.json.
void write_error_record(const std::string& dir, const std::string& scenario, const std::string& kind,
                        const std::string& message);

// Summary of every scenario JSON in 'dir'. Deterministic in the artifact contents.
// With at least one artifact present, criteria without one are listed as SKIPPED.
std::string emit_report(const std::string& dir);

Nonlinearity make_preset(const ExperimentConfig::Preset& preset, int components);

}  // namespace imlab
