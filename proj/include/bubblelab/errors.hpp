#pragma once

#include <stdexcept>
#include <string>

namespace bubblelab {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad simulation grid, bad correlation, malformed experiment file.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A model function handle that cannot be evaluated where it must be.
class InputError : public Error {
public:
    using Error::Error;
};

// Quadrature failure, too many non-finite payoff evaluations.
class NumericError : public Error {
public:
    using Error::Error;
};

// Requested combination of model / payoff / method has no implementation.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

// Asymptotic classification could not reach a verdict.
class IndeterminateError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

// f g - h^2 vanished at an evaluated state of the joint-measure driver.
class SingularityError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

}  // namespace bubblelab
