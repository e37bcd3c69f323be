#pragma once

#include <stdexcept>
#include <string>

namespace qdiff {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

// Zero target density where a coefficient divides by it.
struct SingularityError : Error {
    using Error::Error;
};

// Simulated state left the admissible magnitude.
struct BlowUpError : Error {
    using Error::Error;
};

struct ConvergenceError : Error {
    using Error::Error;
};

struct CalibrationError : Error {
    using Error::Error;
};

// Integral that does not converge (e.g. an exponential moment of a heavy tail).
struct DivergenceError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace qdiff
