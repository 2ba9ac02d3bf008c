#pragma once

#include <stdexcept>
#include <string>

namespace cvmux {

// Raised when a computation returns a result that cannot be trusted
// (eigen-solver breakdown, Holevo drift, all optimizer restarts failing).
// CLI maps these to exit code 1.
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A symplectic eigenvalue fell below the physicality tolerance where a
// physical state was required. Carries the offending eigenvalue.
struct unphysical_state_error : numerical_error {
    double eigenvalue;
    unphysical_state_error(const std::string& msg, double nu)
        : numerical_error(msg), eigenvalue(nu) {}
};

// Bad user-supplied data: malformed files, inconsistent dimensions,
// conflicting options. CLI maps these to exit code 2.
struct input_error : std::runtime_error {
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cvmux
