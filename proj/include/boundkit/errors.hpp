#pragma once

#include <stdexcept>
#include <string>

namespace boundkit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied argument violates an operation's precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The request is well formed but outside what the representation supports
/// (e.g. a norm over an unbounded interval of a potential without compact support).
class Unsupported : public Error {
public:
    using Error::Error;
};

/// Solution magnitude left the representable range during an initial-value solve.
class IntegrationOverflow : public Error {
public:
    IntegrationOverflow(double position, const std::string& what)
        : Error(what), position_(position) {}
    double position() const noexcept { return position_; }

private:
    double position_;
};

/// A Riccati solution blew up in the interior: the operator has an eigenvalue
/// below the assumed lower bound on this interval.
class HypothesisViolation : public Error {
public:
    HypothesisViolation(double position, const std::string& what)
        : Error(what), position_(position) {}
    double position() const noexcept { return position_; }

private:
    double position_;
};

/// Shooting from both ends did not produce a matching solution.
class NotAnEigenvalue : public Error {
public:
    using Error::Error;
};

/// A per-interval bound of the W'+Q construction failed to hold.
class CertificateFailure : public Error {
public:
    using Error::Error;
};

}  // namespace boundkit
