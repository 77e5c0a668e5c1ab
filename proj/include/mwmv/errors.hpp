#pragma once

#include <stdexcept>
#include <string>

namespace mwmv {

/// Input that fails validation (shapes, labels, file contents). CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or non-SPD quantity met during computation. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Layout or covariate design that cannot be fitted. CLI exit code 4.
class DesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mwmv
