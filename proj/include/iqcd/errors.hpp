#pragma once

#include <stdexcept>
#include <string>

namespace iqcd {

// Base class for everything thrown by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible matrix shapes or block sizes.
struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Singular solves, non-converged iterations, ill-conditioned subspaces.
struct NumericalError : Error {
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// Bad user input: config files, intervals, out-of-range parameters.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// An LMI system reported infeasible by the solver.
struct InfeasibleError : Error {
    explicit InfeasibleError(const std::string& msg) : Error(msg) {}
};

}  // namespace iqcd
