#pragma once

#include <stdexcept>
#include <string>

namespace sklab {

/// Malformed input: bad parameters, lengths, specifiers or config values.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An exhaustive computation was requested beyond its enumeration cap.
class FeasibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A code could not be built (rank deficiency, unreadable file).
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

[[noreturn]] inline void fail(const std::string& what) { throw InvalidArgument(what); }

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(what);
}

}  // namespace detail
}  // namespace sklab
