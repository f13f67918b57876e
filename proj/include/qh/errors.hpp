#pragma once

#include <stdexcept>
#include <string>

namespace qh {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Reading past the end of a finite trace source.
struct TraceExhausted : Error {
    using Error::Error;
};

// The query pattern has probability zero under the source, so its hit-time
// distribution does not exist.
struct PatternImpossible : Error {
    using Error::Error;
};

// A raw PMF did not capture mass 1 - epsilon (either passed in short, or the
// dynamic program hit its growth cap without converging).
struct InsufficientMass : Error {
    using Error::Error;
};

// KL divergence requested where the first argument puts mass on a point the
// second gives probability zero.
struct AbsoluteContinuityViolation : Error {
    using Error::Error;
};

// Both hypothesis likelihoods are exactly zero for an observation.
struct BothLikelihoodsZero : Error {
    using Error::Error;
};

// A trace is too short (or the pattern too rare in it) to sample hit times.
struct InsufficientTrace : Error {
    using Error::Error;
};

// No query pattern survived the zero-probability exclusions.
struct EmptyCandidateSet : Error {
    using Error::Error;
};

// Every edge of a query graph was excluded, so no cycle has a finite ratio.
struct NoFiniteCycle : Error {
    using Error::Error;
};

// Malformed configuration, CLI arguments, or input files.
struct ConfigError : Error {
    using Error::Error;
};

} // namespace qh
