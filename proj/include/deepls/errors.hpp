#pragma once

#include <stdexcept>
#include <string>

namespace deepls {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user configuration (bad shapes, ranges, missing fields).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A pressure outside the admissible range p >= p_min > 0.
class AdmissibilityError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Flux data that violates the global mass balance on an all-flux boundary.
class IncompatibleDataError : public ConfigError {
public:
    IncompatibleDataError(const std::string& what, double integral)
        : ConfigError(what), integral_(integral) {}
    double integral() const noexcept { return integral_; }

private:
    double integral_;
};

/// Argument outside the domain of a mathematical function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or a failed numerical procedure.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace deepls
