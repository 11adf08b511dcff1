#pragma once

#include <stdexcept>
#include <string>

namespace spfkit {

/// Base class for all spfkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A required column or field is missing from an input schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A cell could not be parsed (message carries the row index).
class ParseError : public Error {
public:
    using Error::Error;
};

/// An input record violates a data invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// An operation was called with arguments outside its contract.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A numeric input is outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A computation could not be completed (singular system, divergence, ...).
class ComputationError : public Error {
public:
    using Error::Error;
};

}  // namespace spfkit
