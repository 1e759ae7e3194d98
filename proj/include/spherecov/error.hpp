#pragma once

#include <stdexcept>
#include <string>

namespace spherecov {

/// Argument outside the documented domain of an operation.
class input_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A kernel with no mass (all levels zero) cannot be normalized.
class degenerate_kernel_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Caller broke a precondition that cannot be checked cheaply by the type system,
/// e.g. passing an unnormalized kernel where a normalized one is required.
class contract_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Piecewise-polynomial table produced a value far outside [0, 1].
class tabulation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class fit_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class solver_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spherecov
