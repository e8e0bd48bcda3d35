// Copyright 2026 The Gridcast Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace gridcast {

// Process exit codes, one per error family. The CLI maps a caught exception
// to its family's code and emits a machine-parsable JSON record on stderr.
enum class ExitCode : int {
  ok = 0,
  internal = 1,
  cli_usage = 2,
  config = 3,
  data = 4,
  shape = 5,
  format = 6,
  protocol = 7,
  training = 8,
  unknown_target = 9,
  missing_norm_params = 10,
  tape_usage = 11,
  oracle = 12,
};

class Error : public std::runtime_error {
 public:
  Error(std::string kind, ExitCode code, const std::string& msg)
      : std::runtime_error(msg), kind_(std::move(kind)), code_(code) {}

  const std::string& kind() const noexcept { return kind_; }
  ExitCode exit_code() const noexcept { return code_; }

 private:
  std::string kind_;
  ExitCode code_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error("shape", ExitCode::shape, msg) {}
};

class FormatError : public Error {
 public:
  FormatError(const std::string& msg, std::size_t byte_offset)
      : Error("format", ExitCode::format,
              msg + " (at byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config", ExitCode::config, msg) {}

 protected:
  ConfigError(std::string kind, ExitCode code, const std::string& msg)
      : Error(std::move(kind), code, msg) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error("data", ExitCode::data, msg) {}

 protected:
  DataError(std::string kind, ExitCode code, const std::string& msg)
      : Error(std::move(kind), code, msg) {}
};

// Evaluation-protocol violations, e.g. an augmented sample in a test set.
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& msg) : Error("protocol", ExitCode::protocol, msg) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& msg) : Error("training", ExitCode::training, msg) {}
};

// Misuse of the autograd tape (backward on a consumed tape, empty tape, ...).
class TapeUsageError : public Error {
 public:
  explicit TapeUsageError(const std::string& msg)
      : Error("tape_usage", ExitCode::tape_usage, msg) {}
};

// A test oracle detected it cannot run (e.g. non-deterministic forward).
class OracleError : public Error {
 public:
  explicit OracleError(const std::string& msg) : Error("oracle", ExitCode::oracle, msg) {}
};

class UnknownTargetError : public ConfigError {
 public:
  explicit UnknownTargetError(const std::string& msg)
      : ConfigError("unknown_target", ExitCode::unknown_target, msg) {}
};

class MissingNormParamsError : public DataError {
 public:
  explicit MissingNormParamsError(const std::string& msg)
      : DataError("missing_norm_params", ExitCode::missing_norm_params, msg) {}
};

}  // namespace gridcast
