#pragma once

#include <stdexcept>
#include <string>

namespace qdent {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation was violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

/// A physical parameter lies outside its admissible range.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// The inputs are valid but fall outside the domain where the model holds
/// (e.g. photon-number truncation exceeded, small-g2 approximation broken).
class ModelDomainError : public Error {
public:
    using Error::Error;
};

/// An iterative numerical routine failed to converge.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Measurement records cannot determine the requested estimate.
class ReconstructionError : public Error {
public:
    using Error::Error;
};

/// Malformed or unknown configuration input.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace qdent
