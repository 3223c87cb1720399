#pragma once

#include <stdexcept>
#include <string>

namespace na1lab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument violates a documented domain (nonpositive bound, wrong dimension, ...).
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// An operation was called on an input that does not satisfy its precondition,
/// e.g. optimizing in a market where NA1 fails.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// The question has no answer for this input (no root in range, undefined quantity).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A constraint system has no feasible point.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// A numerical routine did not reach its tolerance.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace na1lab
