#pragma once

#include <stdexcept>
#include <string>

namespace macs {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Matrix shapes incompatible with the requested operation.
struct DimensionError : Error {
    using Error::Error;
};

// NaN or Inf handed to a constructor that requires finite entries.
struct NonFiniteError : Error {
    using Error::Error;
};

// Pivot collapsed during factorization.
struct SingularMatrixError : Error {
    using Error::Error;
};

// A precondition of an operation was violated (e.g. asymmetric input to a
// symmetric-only routine, mismatched gain dimensions).
struct ContractError : Error {
    using Error::Error;
};

// Eigenvalue iteration failed to converge.
struct ConvergenceError : Error {
    using Error::Error;
};

// A follower has zero or more than one in-neighbor.
struct TopologyShapeError : Error {
    using Error::Error;
};

// Parent links do not form a tree rooted at the leader.
struct NoSpanningTreeError : Error {
    using Error::Error;
};

// Scenario-level consistency failure; the message names the agent and the
// offending dimension or weight.
struct ValidationError : Error {
    using Error::Error;
};

// Neither the inverse nor the pseudoinverse route can realize the required
// cancellation for an agent/parent pair.
struct FeedforwardInfeasibleError : Error {
    using Error::Error;
};

// Riccati iteration diverged or hit its iteration cap.
struct NonStabilizableError : Error {
    using Error::Error;
};

// An intermediate matrix became numerically singular during synthesis.
struct ConditioningError : Error {
    using Error::Error;
};

// Observer-gain search ended with an unstable estimator network.
struct ObserverSynthesisError : Error {
    ObserverSynthesisError(const std::string& msg, double best_rho_found)
        : Error(msg), best_rho(best_rho_found) {}
    double best_rho;
};

// An unstable synthesis result was handed to the simulator.
struct StabilityError : Error {
    using Error::Error;
};

// Regulator equations have no solution within tolerance.
struct RegulatorInfeasibleError : Error {
    using Error::Error;
};

// Baseline leader-observer network is unstable for the chosen coupling gain.
struct BaselineUnstableError : Error {
    using Error::Error;
};

// Index outside the recorded trace.
struct TraceRangeError : Error {
    using Error::Error;
};

// Scenario file could not be parsed.
struct ParseError : Error {
    using Error::Error;
};

}  // namespace macs
