#pragma once

#include <stdexcept>
#include <string>

namespace snls {

// Raised for invalid configuration or invalid call parameters.
// The CLI maps this to exit code 2.
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Raised for failures during a run (I/O, aborted ensembles, non-contracting
// Picard intervals). The CLI maps this to exit code 1.
class run_error : public std::runtime_error {
public:
  explicit run_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace snls
