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

#ifndef IMLAB_IMLAB_H_
#define IMLAB_IMLAB_H_

#if defined(_WIN32)
#if defined(IMLAB_BUILDING_SHARED)
#define IMLAB_API __declspec(dllexport)
#else
#define IMLAB_API __declspec(dllimport)
#endif
#else
#define IMLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct imlab_session imlab_session;

typedef enum {
  IMLAB_OK = 0,
  IMLAB_CHECK_FAILED = 1,    /* ran to completion, at least one check failed */
  IMLAB_CONFIG_ERROR = 2,    /* bad config, bad argument or unwritable output */
  IMLAB_NUMERICAL_ERROR = 3, /* solver failure, blow-up or internal inconsistency */
} imlab_status;

/* Opens a session from a YAML file; NULL uses the built-in defaults. */
IMLAB_API imlab_status imlab_session_open(const char* config_path, imlab_session** out);

/* Overrides one config key. 'key' is dotted ("seed", "neumann.modes"), 'value' a YAML scalar or list.
   Unknown keys and ill-typed values fail here; value ranges are checked by imlab_session_run. */
IMLAB_API imlab_status imlab_session_set(imlab_session* session, const char* key, const char* value);

/* Runs the configured scenario ("all" runs every scenario in order), writes the artifacts and
   report.md into the output directory. Stops at the first scenario that raises an error. */
IMLAB_API imlab_status imlab_session_run(imlab_session* session);

/* JSON array with one object per scenario of the last run. Free with imlab_string_free. */
IMLAB_API imlab_status imlab_session_summary(const imlab_session* session, char** json_out);

IMLAB_API void imlab_session_close(imlab_session* session);

/* Markdown report over the scenario artifacts in 'dir'. Free with imlab_string_free. */
IMLAB_API imlab_status imlab_report(const char* dir, char** markdown_out);

IMLAB_API void imlab_string_free(char* s);

/* Message of the last failed call on this thread, empty when none. */
IMLAB_API const char* imlab_last_error(void);

IMLAB_API const char* imlab_version(void);

#ifdef __cplusplus
}
#endif

#endif  // IMLAB_IMLAB_H_
