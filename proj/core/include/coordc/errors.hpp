#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace coordc {

/// Malformed input values: bad schema, out-of-range or inconsistent parameters.
struct param_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A protocol precondition does not hold (e.g. alpha too small for the chosen r).
struct precondition_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A verifier rejected a result.
struct verification_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An agent decoder aborted; carries the agent index.
struct decode_error : std::runtime_error {
  decode_error(std::size_t agent, const std::string& what)
      : std::runtime_error("decoder failed for agent " + std::to_string(agent) + ": " + what),
        agent_index(agent) {}
  std::size_t agent_index;
};

/// Iterative solver exhausted its iteration budget; carries the final residual.
struct convergence_error : std::runtime_error {
  convergence_error(const std::string& what, double residual)
      : std::runtime_error(what + " (final residual " + std::to_string(residual) + ")"),
        final_residual(residual) {}
  double final_residual;
};

}  // namespace coordc
