#pragma once

#include <stdexcept>
#include <string>

namespace uss {

// Base for everything the library throws on its own account.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration or argument values (CLI exit code 1).
class ConfigError : public Error {
public:
    using Error::Error;
};

// A documented precondition of an operation does not hold.
class PreconditionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Input outside the mathematical domain of an operation (e.g. a context
// coordinate outside [-1, 1]).
class DomainError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Malformed or non-finite data.
class DataError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// choose/learn called out of order or with the wrong feedback shape.
class ProtocolError : public Error {
public:
    using Error::Error;
};

// An object reached a state its invariants forbid.
class InternalStateError : public Error {
public:
    using Error::Error;
};

// File system failures (CLI exit code 2).
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace uss
