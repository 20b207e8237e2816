#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qtherm {

// Exit codes used by the command line driver.
enum class ExitCode : int {
    ok = 0,
    config_error = 2,
    numeric_error = 3,
    verification_failure = 4,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::numeric_error; }
};

/// Invalid parameters or an unusable configuration.
class ConfigError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::config_error; }
};

/// The requested model is larger than the configured dimension cap.
class ResourceError : public ConfigError {
public:
    ResourceError(const std::string& what, std::size_t dimension)
        : ConfigError(what), dimension_(dimension) {}
    std::size_t dimension() const noexcept { return dimension_; }

private:
    std::size_t dimension_;
};

class NumericError : public Error {
public:
    NumericError(const std::string& what, std::int64_t iterations = 0)
        : Error(what), iterations_(iterations) {}
    std::int64_t iterations() const noexcept { return iterations_; }

private:
    std::int64_t iterations_;
};

/// A (system, bath) label that is not part of the truncated basis.
class LookupError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class InsufficientDataError : public NumericError {
public:
    explicit InsufficientDataError(const std::string& what) : NumericError(what) {}
};

/// Least-squares fit did not converge; carries the last iterate.
class FitError : public NumericError {
public:
    FitError(const std::string& what, std::int64_t iterations, double center, double gamma, double amplitude)
        : NumericError(what, iterations), center(center), gamma(gamma), amplitude(amplitude) {}
    double center, gamma, amplitude;
};

/// Cache file failed its header or checksum validation.
class IntegrityError : public NumericError {
public:
    explicit IntegrityError(const std::string& what) : NumericError(what) {}
};

}  // namespace qtherm
