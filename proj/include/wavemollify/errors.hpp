#pragma once

#include <stdexcept>
#include <string>

namespace wavemollify {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter or input violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// An iterative or adaptive numerical procedure failed to meet its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace wavemollify
