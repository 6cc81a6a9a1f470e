#ifndef LIDARTRAJ_ERRORS_H_
#define LIDARTRAJ_ERRORS_H_

#include <stdexcept>
#include <string>

namespace lidartraj {

// Precondition violations: bad indices, mismatched sizes, non-unit quaternions.
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

// Non-finite values or undefined operations encountered while evaluating or
// differentiating.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or truncated files, unreadable paths.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lidartraj

#endif  // LIDARTRAJ_ERRORS_H_
