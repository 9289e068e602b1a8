#pragma once

#include <stdexcept>
#include <string>

namespace archbo {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value does not match the type declared for its variable.
class SchemaMismatch : public Error {
public:
    using Error::Error;
};

/// A vector or matrix has the wrong length for the operation.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// A design-space definition failed validation.
class InvalidSpace : public Error {
public:
    using Error::Error;
};

/// Enumeration would exceed the configured size cap.
class TooLarge : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

/// Cholesky factorization failed even at the largest nugget.
class IllConditioned : public Error {
public:
    using Error::Error;
};

class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// The initial design produced too few successful evaluations to train a model.
class DoeStarvation : public Error {
public:
    using Error::Error;
};

/// A point handed to a black box was not in corrected canonical form.
class UncorrectedPoint : public Error {
public:
    using Error::Error;
};

/// Reading or writing a file failed.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace archbo
