#pragma once

#include <stdexcept>
#include <string>

namespace gpinn {

// Bad input from the user or a file: CLI maps this to exit code 1.
struct UserError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : UserError {
    using UserError::UserError;
};

struct InvariantError : UserError {
    using UserError::UserError;
};

// Numerical failure (divergence, singular system): CLI maps this to exit code 2.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoConvergenceError : NumericalError {
    using NumericalError::NumericalError;
};

struct DisconnectedGraphError : NumericalError {
    int component_count;
    explicit DisconnectedGraphError(int components)
        : NumericalError("graph is disconnected (" + std::to_string(components) +
                         " components); Fiedler vector undefined"),
          component_count(components) {}
};

} // namespace gpinn
