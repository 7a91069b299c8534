#pragma once

#include <stdexcept>
#include <string>

namespace c14rate {

// Error taxonomy mirrored by the CLI exit codes: usage errors are handled by
// the argument parser (exit 2); ParseError/DataError map to exit 3;
// NumericalError maps to exit 4.

// Malformed input file (bad field, wrong header, version mismatch).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally valid input that violates a contract (duplicate knots,
// determination outside the curve, empty sample set, ...).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite value or failed numerical invariant at run time.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace c14rate
