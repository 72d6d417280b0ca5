#pragma once

#include <stdexcept>
#include <string>

namespace bsdelab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller-supplied arguments violate an operation's precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A structural invariant (probabilities, martingale property, monotonicity) does not hold.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

/// Tree or enumeration would exceed a configured size cap.
class SizingError : public Error {
public:
    using Error::Error;
};

/// Iterative scheme failed to reach its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_defect)
        : Error(what), last_defect_(last_defect) {}

    double last_defect() const noexcept { return last_defect_; }

private:
    double last_defect_;
};

/// Malformed configuration or serialized input.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace bsdelab
