// Copyright 2026 The tlme Authors
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

namespace tlme {

/// Argument outside the mathematical domain of an operation (negative time,
/// inverted interval, non-positive step, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Shapes or indices that do not fit together.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base for failures that arise while numbers are being crunched.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BlowupError : public NumericalError {
 public:
  BlowupError(const std::string& what, double time)
      : NumericalError(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// The per-step probability guard tripped or a state norm underflowed.
class StepSizeError : public NumericalError {
 public:
  StepSizeError(const std::string& what, double time, double probability)
      : NumericalError(what), time_(time), probability_(probability) {}
  double time() const { return time_; }
  double probability() const { return probability_; }

 private:
  double time_;
  double probability_;
};

class PositivityError : public NumericalError {
 public:
  PositivityError(const std::string& what, int state, double time)
      : NumericalError(what), state_(state), time_(time) {}
  int state() const { return state_; }
  double time() const { return time_; }

 private:
  int state_;
  double time_;
};

/// A negative rate reached the Markovian jump engine.
class NegativeRateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// L|psi> vanishes, so the requested jump cannot happen.
class ImpossibleJumpError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// An occupation ratio was requested with an empty source.
class UndefinedSourceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class AmbiguityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tlme
