// Copyright (c) 2026 The fewer authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace fewer {

/// Base of every exception thrown by the library. The CLI maps the concrete
/// type onto its exit code (data 2, config 3, numeric 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument outside its documented domain (dropout rate, bin count, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Input data that makes a quantity undefined or violates a record contract.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary or text file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared during computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace fewer
