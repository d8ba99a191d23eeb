#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scalefree {

// Bad argument to a library operation (non-finite loss, probability <= 0, ...).
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// An adversary or simulator produced something the learner cannot consume.
struct EnvironmentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Solver failed to converge or produced an infeasible point.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace scalefree

namespace scalefree {

// Experiment configuration problem; `line` is 0 when it cannot be located.
struct ConfigError : InvalidInput {
    ConfigError(const std::string& message, std::size_t line_number)
        : InvalidInput(line_number ? "line " + std::to_string(line_number) + ": " + message : message),
          line(line_number) {}
    std::size_t line = 0;
};

}  // namespace scalefree
