#pragma once

#include <stdexcept>
#include <string>

namespace fdkin {

/// Base class for all library errors. The CLI maps each subclass to an exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller passed a value outside an operation's domain.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Incompatible or malformed configuration (kernel/quadrature mismatch, bad config key, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed (degenerate moments, root outside bracket, step rejection, ...).
class NumericalError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace fdkin
