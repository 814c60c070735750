#pragma once

#include <stdexcept>
#include <string>

namespace ratio_mle {

// Bad input or configuration. The CLI maps this to exit code 1.
class validation_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A computation could not be carried out on otherwise valid input.
class numeric_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Some observation has zero density under every component, so the
// E-step responsibilities are undefined.
class degenerate_responsibilities : public numeric_error {
public:
  using numeric_error::numeric_error;
};

} // namespace ratio_mle
