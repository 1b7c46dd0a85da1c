#pragma once

#include <stdexcept>

namespace fieldkit {

// Raised for invalid shapes, arguments and configuration (CLI exit code 2).
// std::invalid_argument is used directly for those; this header only adds
// the numerical failure class.

// Breakdown, singular systems, non-finite iterates (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fieldkit
