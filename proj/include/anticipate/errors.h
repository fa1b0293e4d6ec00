// Copyright 2026 The Anticipate Authors.
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

#ifndef ANTICIPATE_ERRORS_H_
#define ANTICIPATE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace anticipate {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user configuration. The message names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error("config error: " + field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Problems with on-disk datasets: missing files, malformed records and
// invariant violations. `location` is a file path, line or clip id.
class DataError : public Error {
 public:
  enum class Kind { kMissingFile, kMalformed, kInvariant };

  DataError(Kind kind, const std::string& location, const std::string& what)
      : Error(KindName(kind) + " (" + location + "): " + what),
        kind_(kind),
        location_(location) {}

  Kind kind() const { return kind_; }
  const std::string& location() const { return location_; }

 private:
  static std::string KindName(Kind kind) {
    switch (kind) {
      case Kind::kMissingFile:
        return "missing file";
      case Kind::kMalformed:
        return "malformed record";
      case Kind::kInvariant:
        return "invariant violation";
    }
    return "data error";
  }

  Kind kind_;
  std::string location_;
};

// Binary container / checkpoint framing problems.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Precondition violated by a numeric argument (negative distance, etc.).
class DomainError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf encountered while checked mode is on.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Evaluation quantity that does not exist for the given input, e.g. AP with
// no positive clips or ATTC with no true positive at any recall level.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, int batch, const std::string& what)
      : Error("divergence at epoch " + std::to_string(epoch) + ", batch " +
              std::to_string(batch) + ": " + what),
        epoch_(epoch),
        batch_(batch) {}
  int epoch() const { return epoch_; }
  int batch() const { return batch_; }

 private:
  int epoch_;
  int batch_;
};

}  // namespace anticipate

#endif  // ANTICIPATE_ERRORS_H_
