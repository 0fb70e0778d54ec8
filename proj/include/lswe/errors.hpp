#pragma once

// Failure taxonomy for the solver pipeline.  Each condition the CLI maps to a
// distinct exit code gets its own type; everything derives from SolverError so
// callers may catch coarsely.

#include <stdexcept>
#include <string>

namespace lswe {

struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// g1 - eps does not change sign on the bracket around the leading-order guess;
// signals delta outside the contractive regime.
struct BracketFailure : SolverError {
    using SolverError::SolverError;
};

// outer iterates (parameter or profile fixed point) diverge
struct NonContraction : SolverError {
    using SolverError::SolverError;
};

struct MaxIterExceeded : SolverError {
    using SolverError::SolverError;
};

// the bounded-not-computed tail beyond z_max dominates the requested tolerance
struct TailDominance : SolverError {
    using SolverError::SolverError;
};

// exp(S(xi) - S(z)) above the representable range; delta too small for doubles
struct OverflowError : SolverError {
    using SolverError::SolverError;
};

// tail fit requested on a window where the profile is not strictly positive
struct NonPositiveTail : SolverError {
    using SolverError::SolverError;
};

// finite-difference sensitivity estimates fail their Richardson consistency check
struct StepBreakdown : SolverError {
    using SolverError::SolverError;
};

struct IoError : SolverError {
    using SolverError::SolverError;
};

}  // namespace lswe
