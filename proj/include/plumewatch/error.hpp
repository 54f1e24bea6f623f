#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace plumewatch {

// Bad input: malformed request, invariant violation, unknown id supplied by a caller.
// `parameter` names the offending field when there is one.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what, std::string parameter = {})
      : std::runtime_error(what), parameter_(std::move(parameter)) {}
  const std::string& parameter() const noexcept { return parameter_; }

 private:
  std::string parameter_;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem / storage failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotImplementedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace plumewatch
