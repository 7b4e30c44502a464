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

#include <filesystem>
#include <string>

#include "doctest.h"
#include "imlab/imlab.h"

namespace fs = std::filesystem;

namespace {
fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("imlab_test_capi_" + name);
  fs::remove_all(dir);
  return dir;
}
}  // namespace

TEST_CASE("session lifecycle") {
  CHECK(std::string(imlab_version()).size() > 0);
  imlab_session* s = nullptr;
  REQUIRE(imlab_session_open(nullptr, &s) == IMLAB_OK);
  REQUIRE(s != nullptr);
  fs::path dir = fresh_dir("run");
  CHECK(imlab_session_set(s, "scenario", "gap-table") == IMLAB_OK);
  CHECK(imlab_session_set(s, "output_dir", dir.c_str()) == IMLAB_OK);
  CHECK(imlab_session_set(s, "manifold.modes", "32") == IMLAB_OK);
  CHECK(imlab_session_set(s, "manifold.lipschitz_pairs", "8") == IMLAB_OK);
  CHECK(imlab_session_set(s, "gap_table.K", "[4]") == IMLAB_OK);
  CHECK(imlab_session_run(s) == IMLAB_OK);
  CHECK(fs::exists(dir / "gap-table.json"));
  CHECK(fs::exists(dir / "report.md"));

  char* summary = nullptr;
  REQUIRE(imlab_session_summary(s, &summary) == IMLAB_OK);
  CHECK(std::string(summary).find("\"scenario\": \"gap-table\"") != std::string::npos);
  imlab_string_free(summary);

  char* report = nullptr;
  REQUIRE(imlab_report(dir.c_str(), &report) == IMLAB_OK);
  CHECK(std::string(report).find("| 1 | gap-table | PASS |") != std::string::npos);
  imlab_string_free(report);
  imlab_session_close(s);
}

TEST_CASE("errors map to status codes") {
  imlab_session* s = nullptr;
  CHECK(imlab_session_open("/nonexistent/imlab.yaml", &s) == IMLAB_CONFIG_ERROR);
  CHECK(s == nullptr);
  CHECK(std::string(imlab_last_error()).find("cannot read") != std::string::npos);
  CHECK(imlab_session_open(nullptr, nullptr) == IMLAB_CONFIG_ERROR);

  REQUIRE(imlab_session_open(nullptr, &s) == IMLAB_OK);
  CHECK(std::string(imlab_last_error()).empty());
  CHECK(imlab_session_set(s, "no_such_key", "1") == IMLAB_CONFIG_ERROR);
  CHECK(imlab_session_set(s, "modes", "[") == IMLAB_CONFIG_ERROR);
  CHECK(imlab_session_set(s, "manifold..K", "3") == IMLAB_CONFIG_ERROR);
  CHECK(imlab_session_set(s, nullptr, "3") == IMLAB_CONFIG_ERROR);
  // A rejected override leaves the session usable.
  CHECK(imlab_session_set(s, "seed", "11") == IMLAB_OK);
  CHECK(imlab_session_set(s, "nonlinearity.preset", "general-f(u,ux)") == IMLAB_OK);
  CHECK(imlab_session_set(s, "scenario", "roundtrip") == IMLAB_OK);
  fs::path dir = fresh_dir("error");
  CHECK(imlab_session_set(s, "output_dir", dir.c_str()) == IMLAB_OK);
  CHECK(imlab_session_run(s) == IMLAB_CONFIG_ERROR);
  CHECK(fs::exists(dir / "roundtrip.error.json"));
  imlab_session_close(s);

  char* out = nullptr;
  CHECK(imlab_report("/nonexistent/imlab", &out) == IMLAB_CONFIG_ERROR);
  CHECK(out == nullptr);
  CHECK(imlab_session_run(nullptr) == IMLAB_CONFIG_ERROR);
}

TEST_CASE("dependent overrides apply in any order and ranges are checked at run time") {
  imlab_session* s = nullptr;
  REQUIRE(imlab_session_open(nullptr, &s) == IMLAB_OK);
  fs::path dir = fresh_dir("order");
  CHECK(imlab_session_set(s, "output_dir", dir.c_str()) == IMLAB_OK);
  CHECK(imlab_session_set(s, "scenario", "roundtrip") == IMLAB_OK);
  CHECK(imlab_session_set(s, "nonlinearity.preset", "coupled-2d-system") == IMLAB_OK);
  CHECK(imlab_session_set(s, "components", "2") == IMLAB_OK);
  CHECK(imlab_session_set(s, "modes", "64") == IMLAB_OK);
  CHECK(imlab_session_set(s, "roundtrip.samples", "2") == IMLAB_OK);
  CHECK(imlab_session_run(s) == IMLAB_OK);
  CHECK(imlab_session_set(s, "roundtrip.samples", "-1") == IMLAB_OK);
  CHECK(imlab_session_run(s) == IMLAB_CONFIG_ERROR);
  CHECK(std::string(imlab_last_error()).find("roundtrip") != std::string::npos);
  imlab_session_close(s);
}
