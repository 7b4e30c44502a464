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

#include "imlab/imlab.h"

#include <yaml-cpp/yaml.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "imlab/error.hpp"
#include "imlab/lab.hpp"
#include "json.hpp"

struct imlab_session {
  YAML::Node document;
  imlab::ExperimentConfig config;
  std::vector<imlab::ScenarioResult> results;
};

namespace {

thread_local std::string last_error;

const char* kind_name(imlab::ErrorKind kind) {
  switch (kind) {
    case imlab::ErrorKind::Domain: return "domain";
    case imlab::ErrorKind::Configuration: return "configuration";
    case imlab::ErrorKind::Numerical: return "numerical";
    case imlab::ErrorKind::Consistency: return "consistency";
    case imlab::ErrorKind::Io: return "io";
  }
  return "unknown";
}

imlab_status status_of(imlab::ErrorKind kind) {
  switch (kind) {
    case imlab::ErrorKind::Domain:
    case imlab::ErrorKind::Configuration:
    case imlab::ErrorKind::Io:
      return IMLAB_CONFIG_ERROR;
    default:
      return IMLAB_NUMERICAL_ERROR;
  }
}

// Runs 'body', translating exceptions into status codes and the thread-local message.
template <class F>
imlab_status guarded(F&& body, std::string* kind = nullptr) {
  try {
    last_error.clear();
    return body();
  } catch (const imlab::Error& e) {
    last_error = e.what();
    if (kind) *kind = kind_name(e.kind());
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    if (kind) *kind = "numerical";
    return IMLAB_NUMERICAL_ERROR;
  } catch (const std::exception& e) {
    last_error = e.what();
    if (kind) *kind = "numerical";
    return IMLAB_NUMERICAL_ERROR;
  }
}

char* copy_out(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

imlab_status reject(const char* message) {
  last_error = message;
  return IMLAB_CONFIG_ERROR;
}

}  // namespace

extern "C" {

imlab_status imlab_session_open(const char* config_path, imlab_session** out) {
  if (!out) return reject("null output handle");
  *out = nullptr;
  return guarded([&] {
    auto session = std::make_unique<imlab_session>();
    if (config_path) {
      std::ifstream in(config_path);
      if (!in) throw imlab::config_error(std::string("cannot read config file '") + config_path + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      try {
        session->document = YAML::Load(ss.str());
      } catch (const YAML::Exception& e) {
        throw imlab::config_error(std::string("invalid YAML: ") + e.what());
      }
      session->config = imlab::parse_config(ss.str());
    }
    if (!session->document.IsMap()) session->document = YAML::Node(YAML::NodeType::Map);
    *out = session.release();
    return IMLAB_OK;
  });
}

imlab_status imlab_session_set(imlab_session* session, const char* key, const char* value) {
  if (!session || !key || !value) return reject("null argument");
  return guarded([&] {
    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string part; std::getline(ss, part, '.');) {
      if (part.empty()) throw imlab::config_error(std::string("bad config key '") + key + "'");
      parts.push_back(part);
    }
    if (parts.empty()) throw imlab::config_error("empty config key");
    YAML::Node parsed;
    try {
      parsed = YAML::Load(value);
    } catch (const YAML::Exception& e) {
      throw imlab::config_error(std::string("invalid value for '") + key + "': " + e.what());
    }
    YAML::Node doc = YAML::Clone(session->document);
    std::vector<YAML::Node> path{doc};
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
      YAML::Node next = path.back()[parts[i]];
      if (!next.IsMap()) next = YAML::Node(YAML::NodeType::Map);
      path.back()[parts[i]] = next;
      path.push_back(next);
    }
    path.back()[parts.back()] = parsed;
    // Ranges are checked at run time, so dependent keys can be overridden in any order.
    session->config = imlab::parse_config(YAML::Dump(doc), false);
    session->document = doc;
    return IMLAB_OK;
  });
}

imlab_status imlab_session_run(imlab_session* session) {
  if (!session) return reject("null session");
  session->results.clear();
  std::string current, kind;
  imlab_status status = guarded(
      [&] {
        imlab::validate_config(session->config);
        bool all_pass = true;
        for (const auto& name : imlab::expand_scenarios(session->config.scenario)) {
          current = name;
          imlab::ExperimentConfig cfg = session->config;
          cfg.scenario = name;
          session->results.push_back(imlab::run_scenario(cfg));
          all_pass = all_pass && session->results.back().pass();
        }
        current.clear();
        std::string report = imlab::emit_report(session->config.output_dir);
        std::ofstream out(std::filesystem::path(session->config.output_dir) / "report.md");
        if (!out) throw imlab::io_error("cannot write report.md");
        out << report;
        return all_pass ? IMLAB_OK : IMLAB_CHECK_FAILED;
      },
      &kind);
  if (status != IMLAB_OK && status != IMLAB_CHECK_FAILED)
    imlab::write_error_record(session->config.output_dir, current, kind, last_error);
  return status;
}

imlab_status imlab_session_summary(const imlab_session* session, char** json_out) {
  if (!session || !json_out) return reject("null argument");
  *json_out = nullptr;
  return guarded([&] {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : session->results) {
      nlohmann::json checks = nlohmann::json::array();
      for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"value", c.value}, {"relation", c.relation},
                          {"threshold", c.threshold}, {"pass", c.pass}});
      arr.push_back({{"scenario", r.scenario}, {"criterion", r.criterion}, {"seed", r.seed}, {"pass", r.pass()},
                     {"seconds", r.seconds}, {"checks", checks}, {"metrics", r.metrics}, {"artifacts", r.artifacts}});
    }
    *json_out = copy_out(arr.dump(2));
    return IMLAB_OK;
  });
}

void imlab_session_close(imlab_session* session) { delete session; }

imlab_status imlab_report(const char* dir, char** markdown_out) {
  if (!dir || !markdown_out) return reject("null argument");
  *markdown_out = nullptr;
  return guarded([&] {
    *markdown_out = copy_out(imlab::emit_report(dir));
    return IMLAB_OK;
  });
}

void imlab_string_free(char* s) { delete[] s; }

const char* imlab_last_error(void) { return last_error.c_str(); }

const char* imlab_version(void) { return "0.1.0"; }

}  // extern "C"
