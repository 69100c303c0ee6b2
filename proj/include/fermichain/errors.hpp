#pragma once

#include <stdexcept>
#include <string>

namespace fermichain {

// Unusable configuration or arguments (CLI exit code 2).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Physically meaningful refusals: degenerate, empty or full Fermi sea (exit code 3).
struct physics_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Solver breakdown or a violated numerical contract (exit code 4).
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace fermichain
