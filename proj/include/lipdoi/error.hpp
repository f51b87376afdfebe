#pragma once

#include <stdexcept>
#include <string>

namespace lipdoi {

// Malformed or out-of-contract input (bad dimensions, non-finite entries,
// unreadable files, invalid config). The CLI maps this to exit code 2.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numeric parameter outside its admissible range (p < 1, tol, n = 0, ...).
class InvalidParameter : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class ConvergenceFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A function produced a non-finite value where a finite one is required.
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A file could not be opened or written; the message names the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A numerical identity that must hold up to rounding did not (for example the
// Birman-Solomyak residual in a sweep). Signals an implementation bug.
class ContractViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PreconditionViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A weak-decay certificate failed verification. Carries both sides of the
// violated inequality.
class CertificateUnsound : public std::runtime_error {
public:
    CertificateUnsound(const std::string& check, double measured, double bound)
        : std::runtime_error("certificate unsound: " + check + " (measured " + std::to_string(measured) +
                             " > bound " + std::to_string(bound) + ")"),
          measured_(measured),
          bound_(bound) {}

    double measured() const noexcept { return measured_; }
    double bound() const noexcept { return bound_; }

private:
    double measured_;
    double bound_;
};

}  // namespace lipdoi
