/*
 * Copyright 2026 The sleepx Authors.
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

#ifndef SLEEPX_ERROR_HPP_
#define SLEEPX_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sleepx {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes or model widths do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An index (class id, time step, column) is outside its range.
class IndexError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Input does not match the feature schema the model was trained on.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A malformed row in an input file. Carries the 1-based line number.
class RowError : public Error {
 public:
  RowError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Duplicate or inconsistent records (e.g. a repeated subject/timestep pair).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Not enough records to satisfy a requested partition.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Exact enumeration requested beyond the player budget.
class ComplexityError : public Error {
 public:
  using Error::Error;
};

// A least-squares system could not be solved.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

// Optimization diverged. Carries the epoch at which it happened.
class TrainingError : public Error {
 public:
  TrainingError(std::size_t epoch, const std::string& what)
      : Error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

// Operation not available for this model architecture.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace sleepx

#endif  // SLEEPX_ERROR_HPP_
