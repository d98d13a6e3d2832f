#pragma once

#include <stdexcept>
#include <string>

namespace scr::harness {

// Bad or inconsistent configuration; the CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Training blew up (non-finite loss or gradient); exit code 2. Carries the
// stage and step so the failure point is identifiable from the message.
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& stage, std::size_t step, const std::string& detail)
      : std::runtime_error("divergence in stage '" + stage + "' at step " +
                           std::to_string(step) + ": " + detail) {}
};

}  // namespace scr::harness
