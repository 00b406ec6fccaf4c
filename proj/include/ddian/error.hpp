/*
 * Copyright 2026 The DDIAN Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
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

namespace ddian {

// Base of every error the library throws. The CLI maps ValidationError
// subclasses to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Tensor shapes do not agree.
class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// An operation parameter is outside its domain (e.g. negative reversal coefficient).
class ParameterError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A caller violated an API precondition.
class ContractError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Bad labels or domain ids in sample data.
class DataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Leave-one-domain-out protocol violations.
class ProtocolError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Model file could not be decoded.
class LoadError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ddian
