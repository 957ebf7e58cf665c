#pragma once

#include <stdexcept>
#include <string>

namespace cliffhull {

// Four input points span an affine subspace of dimension < 3; no unique hyperplane.
struct AffinelyDependent : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Hyperplane misses the torus (offset >= sum of circle-plane norms): no cap boundary.
struct EmptyBoundary : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An orientation determinant is exactly zero under exact arithmetic. Signals
// non-generic input (coplanar or duplicated points); never perturbed away.
struct DegeneratePredicateTie : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Poisson intensity is non-finite or non-positive.
struct InvalidRate : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Argument outside the documented domain of a formula.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct EmptyInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A scaling fit was requested over bins with too few raw hits to be meaningful.
struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A structural invariant failed at runtime (maps to CLI exit code 2).
struct InvariantViolation : std::logic_error {
    using std::logic_error::logic_error;
};

} // namespace cliffhull
