#pragma once

#include <stdexcept>
#include <string>

namespace mfq {

// Base of every error thrown by the library. Subclasses fall into two
// families that callers (the CLI in particular) map to distinct exit codes:
// bad input (InputError and its children) and numerical failure
// (NumericalError and its children).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
  using Error::Error;
};

// Lookup outside the domain of a history, trajectory or sample path.
class RangeError : public InputError {
public:
  using InputError::InputError;
};

// Stored derivatives were requested but not recorded.
class ConfigError : public InputError {
public:
  using InputError::InputError;
};

// Linearization requested at the non-differentiable point lambda*f(0) == mu*c.
class BoundaryError : public InputError {
public:
  using InputError::InputError;
};

// (q*)^(p-1) is undefined because q* == 0 and p != 1.
class SingularityError : public InputError {
public:
  using InputError::InputError;
};

// A bisection bracket whose ends do not straddle the threshold.
class BracketError : public InputError {
public:
  using InputError::InputError;
};

class NumericalError : public Error {
public:
  using Error::Error;
};

// Integration produced a non-finite, huge or negative state.
class DivergenceError : public NumericalError {
public:
  DivergenceError(const std::string& what, double time)
      : NumericalError(what + " at t=" + std::to_string(time)), time_(time) {}

  double time() const noexcept { return time_; }

private:
  double time_;
};

class ConvergenceError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class SimulationError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

}  // namespace mfq
