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

// Command-line front end over the C API.
//   imlab run --config <file> [--scenario <name>] [--out <dir>] [--seed <n>] [--set key=value ...]
//   imlab report --in <dir>
// Exit codes follow imlab_status: 0 pass, 1 a check failed, 2 config error, 3 numerical error.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "imlab/imlab.h"
#include "json.hpp"

namespace {

int fail(imlab_status status, const std::string& stage) {
  nlohmann::json record{{"error", stage}, {"status", int(status)}, {"message", imlab_last_error()}};
  std::cerr << record.dump() << "\n";
  return int(status);
}

int run(const std::string& config, const std::string& scenario, const std::string& out, const std::string& seed,
        const std::vector<std::string>& sets) {
  imlab_session* session = nullptr;
  imlab_status status = imlab_session_open(config.empty() ? nullptr : config.c_str(), &session);
  if (status != IMLAB_OK) return fail(status, "open");
  auto set = [&](const std::string& key, const std::string& value) {
    return value.empty() ? IMLAB_OK : imlab_session_set(session, key.c_str(), value.c_str());
  };
  status = set("scenario", scenario);
  if (status == IMLAB_OK) status = set("output_dir", out);
  if (status == IMLAB_OK) status = set("seed", seed);
  for (const auto& kv : sets) {
    if (status != IMLAB_OK) break;
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::cerr << nlohmann::json{{"error", "set"}, {"status", 2}, {"message", "expected key=value: " + kv}}.dump()
                << "\n";
      imlab_session_close(session);
      return IMLAB_CONFIG_ERROR;
    }
    status = imlab_session_set(session, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
  }
  if (status != IMLAB_OK) {
    int code = fail(status, "config");
    imlab_session_close(session);
    return code;
  }

  status = imlab_session_run(session);
  char* summary = nullptr;
  if (imlab_session_summary(session, &summary) == IMLAB_OK) {
    for (const auto& r : nlohmann::json::parse(summary)) {
      std::printf("%s %s (criterion %d)\n", r["pass"].get<bool>() ? "PASS" : "FAIL",
                  r["scenario"].get<std::string>().c_str(), r["criterion"].get<int>());
      for (const auto& c : r["checks"])
        if (!c["pass"].get<bool>())
          std::printf("  failed %s: %.6g %s %.6g\n", c["name"].get<std::string>().c_str(),
                      c["value"].is_number() ? c["value"].get<double>() : NAN,
                      c["relation"].get<std::string>().c_str(), c["threshold"].get<double>());
    }
    imlab_string_free(summary);
  }
  imlab_session_close(session);
  if (status != IMLAB_OK && status != IMLAB_CHECK_FAILED) return fail(status, "run");
  return int(status);
}

int report(const std::string& dir) {
  char* text = nullptr;
  imlab_status status = imlab_report(dir.c_str(), &text);
  if (status != IMLAB_OK) return fail(status, "report");
  std::fputs(text, stdout);
  imlab_string_free(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inertial manifold experiments"};
  app.set_version_flag("--version", std::string(imlab_version()));
  app.require_subcommand(1);

  std::string config, scenario, out, seed, in_dir;
  std::vector<std::string> sets;
  CLI::App* run_cmd = app.add_subcommand("run", "run a scenario and write its artifacts");
  run_cmd->add_option("--config", config, "YAML config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--scenario", scenario, "scenario name or 'all'");
  run_cmd->add_option("--out", out, "output directory");
  run_cmd->add_option("--seed", seed, "random seed");
  run_cmd->add_option("--set", sets, "config override key=value, repeatable");

  CLI::App* report_cmd = app.add_subcommand("report", "summarize the artifacts of a directory");
  report_cmd->add_option("--in", in_dir, "artifact directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : IMLAB_CONFIG_ERROR;
  }
  if (*run_cmd) return run(config, scenario, out, seed, sets);
  return report(in_dir);
}
