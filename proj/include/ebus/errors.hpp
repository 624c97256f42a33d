#pragma once

#include <stdexcept>
#include <string>

namespace ebus {

// Bad arguments or configuration: the caller can fix it.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A broken internal contract (infeasible plan extraction, impossible solver
// status). Never expected in correct operation.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace ebus
