#ifndef COLLABTRACK_ERRORS_HPP_
#define COLLABTRACK_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace collabtrack {

/// Malformed or missing input data: unreadable files, bad headers, row-count
/// mismatches. The command line maps this to exit code 2.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Bad configuration or command-line usage (exit code 1).
class UsageError : public std::runtime_error {
public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

/// A NaN or infinity showed up where a finite value is required (exit code 3).
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace collabtrack

#endif  // COLLABTRACK_ERRORS_HPP_
