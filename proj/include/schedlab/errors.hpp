#pragma once

#include <stdexcept>

namespace schedlab {

/// Base class for all schedlab errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };

/// A fixed-point or series iteration hit its iteration cap.
struct NoConvergence : Error { using Error::Error; };

/// rho^2(A)(1-lambda) >= 1: the discounted Lyapunov series diverges.
struct SpectralConditionViolated : Error { using Error::Error; };

/// lambda == 1 passed to the index formula, which is singular at 1-lambda = 0.
struct PerfectChannel : Error { using Error::Error; };

/// A bisection or threshold scan could not bracket its solution.
struct BracketFailure : Error { using Error::Error; };

/// The instance sampler exceeded its resampling budget.
struct GenerationExhausted : Error { using Error::Error; };

/// A policy variant is missing the table payload it needs.
struct MissingTable : Error { using Error::Error; };

/// A model violates a construction invariant (symmetry, definiteness, PBH rank).
struct ModelInvariant : Error { using Error::Error; };

/// An error-cost trace exceeded the representable budget (unstable A, huge tau).
struct CostOverflow : Error { using Error::Error; };

}  // namespace schedlab
