#pragma once

#include <stdexcept>
#include <string>

namespace pcsft {

/// Input outside an operation's domain (zero vector, negative epsilon, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  DimensionMismatch(const std::string& where, std::size_t expected, std::size_t got)
      : std::invalid_argument(where + ": dimension mismatch (expected " + std::to_string(expected) +
                              ", got " + std::to_string(got) + ")") {}
};

/// Non-finite evaluation, failed tolerance check or similar numerical breakdown.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pcsft
