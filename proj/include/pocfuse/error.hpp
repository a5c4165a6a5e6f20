#pragma once

#include <stdexcept>
#include <string>

namespace pocfuse {

// Bad command line or configuration. CLI exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed corpus, checkpoint or other input data. CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical or structural invariant was violated. CLI exit code 3.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvariantError(message);
}

}  // namespace pocfuse
