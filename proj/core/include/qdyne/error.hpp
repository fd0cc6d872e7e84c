#pragma once

#include <stdexcept>
#include <string>

namespace qdyne {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates a documented precondition or type invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The population does not depend on the signal phase (rotation by a multiple of 2π or no drive).
class DegenerateDrive : public Error {
 public:
  using Error::Error;
};

/// The beat phase shift is undefined because sin(Ω_sig τ) vanishes.
class UndefinedPhaseShift : public Error {
 public:
  using Error::Error;
};

/// Operation requested for a signal mode it does not support.
class InvalidMode : public Error {
 public:
  using Error::Error;
};

}  // namespace qdyne
