#pragma once

#include <stdexcept>
#include <string>

namespace cpbart {

/// Bad or insufficient input data (CSV problems, degenerate samples, schema mismatch).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical routine produced a value it cannot recover from.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cpbart
