#pragma once

#include <stdexcept>
#include <string>

namespace jcr {

// Invalid argument / violated precondition on a library call.
class invalid_input : public std::invalid_argument {
 public:
  explicit invalid_input(const std::string& what) : std::invalid_argument(what) {}
};

// Numerically degenerate configuration (zero gain bin, ill-conditioned
// normal equations, empty lattice, ...). CLI maps this to exit code 3.
class degenerate_error : public std::runtime_error {
 public:
  explicit degenerate_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent run configuration. CLI maps this to exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace jcr
