#pragma once

#include <stdexcept>

namespace robinrd {

// Bad parameters, out-of-domain arguments, malformed configuration.
class invalid_input : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// An iteration or quadrature failed to reach its tolerance.
class numerical_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace robinrd
