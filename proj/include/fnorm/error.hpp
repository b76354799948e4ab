/*
 * Copyright 2026 The fnorm Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace fnorm {

enum class ErrorKind {
  kValidation,  // bad input data, configuration or arguments
  kShape,       // tensor/matrix dimension mismatch
  kIo,          // filesystem and format problems
  kNumerical,   // non-finite values, exhausted sampling budgets
  kUnsupported,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorKind::kValidation, message) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& message)
      : Error(ErrorKind::kShape, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message)
      : Error(ErrorKind::kIo, message) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& message)
      : Error(ErrorKind::kNumerical, message) {}
};

class UnsupportedError : public Error {
 public:
  explicit UnsupportedError(const std::string& message)
      : Error(ErrorKind::kUnsupported, message) {}
};

}  // namespace fnorm
