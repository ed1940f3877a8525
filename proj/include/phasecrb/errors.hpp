#pragma once

#include <stdexcept>
#include <string>

namespace phasecrb {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Configuration / precondition problems.
struct InvalidArgument : Error {
    using Error::Error;
};
struct InvalidWidth : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};
struct InvalidProbabilities : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};
struct ConfigError : Error {
    using Error::Error;
};

// Numerical failures.
struct NonConvergence : Error {
    using Error::Error;
};
struct SingularMatrix : Error {
    using Error::Error;
};
struct NotHermitian : Error {
    using Error::Error;
};
struct NotPositiveSemidefinite : Error {
    using Error::Error;
};
struct RegimeViolation : Error {
    using Error::Error;
};
struct DegenerateOmega : Error {
    using Error::Error;
};
struct NegativeProbability : Error {
    using Error::Error;
};
struct StepTooLarge : Error {
    using Error::Error;
};
struct BoundaryMaximum : Error {
    using Error::Error;
};

}  // namespace phasecrb
