#pragma once

// Exception types shared by every module.

#include <stdexcept>
#include <string>

namespace stno {

/// Base of all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameter combination, detected before any work starts.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The requested bias is at or below the auto-oscillation threshold.
class NotOscillating : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

/// Normal equations are numerically singular and no ridge term was given.
class SingularSystem : public Error {
public:
    using Error::Error;
};

}  // namespace stno
