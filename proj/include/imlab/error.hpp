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

#include <stdexcept>
#include <string>

namespace imlab {

enum class ErrorKind {
  Domain,
  Configuration,
  Numerical,
  Consistency,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Bad arguments: mode index out of range, size mismatch, basis mismatch.
inline Error domain_error(const std::string& what) { return Error(ErrorKind::Domain, what); }
inline Error config_error(const std::string& what) { return Error(ErrorKind::Configuration, what); }
// Blowup, loss of invertibility, non-convergent iteration.
inline Error numerical_error(const std::string& what) { return Error(ErrorKind::Numerical, what); }
inline Error consistency_error(const std::string& what) { return Error(ErrorKind::Consistency, what); }
inline Error io_error(const std::string& what) { return Error(ErrorKind::Io, what); }

}  // namespace imlab
