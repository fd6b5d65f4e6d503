#pragma once

#include <stdexcept>
#include <string>

namespace postsel {

// Bad user input: malformed files, inconsistent shapes, unknown config keys.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A solver or factorization failed where the inputs were formally valid.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace postsel
