#pragma once

#include <stdexcept>
#include <string>

namespace cansys {

// Bad user input: malformed specs, out-of-domain arguments. CLI exit code 2.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : InputError {
    using InputError::InputError;
};

// An operation was called on data that does not meet its preconditions,
// e.g. a criterion engine on a Hamiltonian with infinite h1-mass.
struct PreconditionError : InputError {
    using InputError::InputError;
};

struct DegenerateTailError : PreconditionError {
    using PreconditionError::PreconditionError;
};

struct LengthError : InputError {
    using InputError::InputError;
};

// Growth functions of order <= 1 are outside the scope of the criteria. Exit code 3.
struct UnsupportedOrderError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Iterations that fail to converge, unbracketable roots. Exit code 4.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RangeError : NumericalError {
    using NumericalError::NumericalError;
};

}  // namespace cansys
