#pragma once

#include <stdexcept>
#include <string>

namespace rare {

// I/O failures: missing files, unreadable paths, short reads. CLI exit code 1.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input: bad records, out-of-range ids, unusable
// configs. CLI exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values where finite math is required. CLI exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_input(bool ok, const std::string& msg) {
  if (!ok) throw InputError(msg);
}

inline void require_finite_msg(bool ok, const std::string& msg) {
  if (!ok) throw NumericError(msg);
}

}  // namespace rare
