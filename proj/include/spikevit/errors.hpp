// Copyright 2026 The spikevit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace spikevit {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// A precondition of an operation does not hold for the given value.
class ContractError : public Error {
 public:
  using Error::Error;
};

class InvalidGroupingError : public Error {
 public:
  using Error::Error;
};

class MalformedTrainError : public Error {
 public:
  using Error::Error;
};

class UnsupportedAmplitudeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Problems with a weight file; subclasses name the offending condition.
class WeightFileError : public Error {
 public:
  using Error::Error;
};

class TruncatedFileError : public WeightFileError {
 public:
  using WeightFileError::WeightFileError;
};

class BadMagicError : public WeightFileError {
 public:
  using WeightFileError::WeightFileError;
};

class VersionError : public WeightFileError {
 public:
  using WeightFileError::WeightFileError;
};

class MissingEntryError : public WeightFileError {
 public:
  using WeightFileError::WeightFileError;
};

class ShapeMismatchError : public WeightFileError {
 public:
  using WeightFileError::WeightFileError;
};

class UnexpectedEntryError : public WeightFileError {
 public:
  using WeightFileError::WeightFileError;
};

class ConfigMismatchError : public WeightFileError {
 public:
  using WeightFileError::WeightFileError;
};

}  // namespace spikevit
