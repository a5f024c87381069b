#pragma once

#include <stdexcept>
#include <string>

namespace ked {

// Bad arguments, malformed specs, violated preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A kernel/measure combination with neither a closed form nor a usable fallback.
class UnsupportedPair : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cholesky failure after jitter escalation, negative variance beyond roundoff, ...
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

inline void require(bool cond, const char* what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace ked
