#pragma once

#include <stdexcept>
#include <string>

namespace ftbrain {

// Base class for all library failures. Messages are prefixed with the
// owning module, e.g. "dataio: bad magic".
class Error : public std::runtime_error {
 public:
  Error(const std::string& module, const std::string& what)
      : std::runtime_error(module + ": " + what) {}
};

// Bad argument or precondition violation (shape mismatch, out-of-range label).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Numerical failure during a run (NaN/Inf loss, divergence).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace ftbrain
