#ifndef RIDE_ERRORS_HPP
#define RIDE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ride {

// Invalid arguments or shape mismatches detected at an API boundary.
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed bytes in an external file format (image, model, config).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure (degenerate covariance, non-finite loss).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ride

#endif  // RIDE_ERRORS_HPP
