#pragma once

#include <stdexcept>
#include <string>

namespace dps {

// Bad user-facing configuration (grid/weight/exponents/CLI input).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Iterative solver could not reach its contract (line search stall,
// bracket failure, divergence guard).
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// No admissible fibering direction exists for the requested parameters.
struct ManifoldEmpty : SolverError {
    explicit ManifoldEmpty(const std::string& what) : SolverError(what) {}
};

} // namespace dps
