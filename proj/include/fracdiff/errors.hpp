#pragma once

#include <stdexcept>
#include <string>

namespace fracdiff {

/// Argument outside the mathematical domain of an operation (pole, negative time, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A numerical procedure failed to reach its declared tolerance.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Atom or mode index out of range.
class IndexError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Sample vectors whose length does not match the grid they are declared on.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A hypothesis required by a bound or estimate does not hold for the given input.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The subordinator path ended before crossing the requested level.
class InsufficientHorizonError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace fracdiff
