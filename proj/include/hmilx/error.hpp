// Copyright 2026 The Authors.
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

namespace hmilx {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// The same schema position holds conflicting variants or atomic kinds.
class MixedTypeError : public Error {
 public:
  using Error::Error;
};

// A sample does not fit the schema a model was built from.
class SchemaMismatch : public Error {
 public:
  using Error::Error;
};

// An atomic value does not match the kind its encoder expects.
class KindMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyStats : public Error {
 public:
  using Error::Error;
};

class InsufficientPaths : public Error {
 public:
  using Error::Error;
};

class GenerationStall : public Error {
 public:
  using Error::Error;
};

// The full sample does not reach the requested threshold.
class InconsistentInput : public Error {
 public:
  using Error::Error;
};

// Addition exhausted every candidate without reaching the threshold. Only
// possible when the valuation is not the one the precondition was checked on.
class UnreachableThreshold : public Error {
 public:
  using Error::Error;
};

class ModelFormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace hmilx
