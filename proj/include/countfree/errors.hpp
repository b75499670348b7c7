#pragma once

#include <stdexcept>
#include <string>

namespace countfree {

/// Failure reading or writing a file. The message always names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a valid result (reducible chain,
/// divergent bound, non-finite data).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed binary input (bad magic, truncation, NaN payload).
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace countfree
