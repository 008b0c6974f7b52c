#pragma once

#include <stdexcept>
#include <string>

namespace spde {

// Every failure raised by the library derives from Error so callers can map
// the category onto an exit status without string matching.
enum class ErrorKind {
    Config,         // malformed or incompatible configuration
    InvalidField,   // non-finite entries
    NoiseMagnitude, // e^W overflow
    NonConvergence, // Picard loop exceeded max_iter
    Io,
    Internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class InvalidFieldError : public Error {
public:
    explicit InvalidFieldError(const std::string& what)
        : Error(ErrorKind::InvalidField, what) {}
};

class NoiseMagnitudeError : public Error {
public:
    NoiseMagnitudeError(const std::string& what, double max_abs_w)
        : Error(ErrorKind::NoiseMagnitude, what), max_abs_w_(max_abs_w) {}

    double max_abs_w() const noexcept { return max_abs_w_; }

private:
    double max_abs_w_;
};

class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, double last_ratio, int step)
        : Error(ErrorKind::NonConvergence, what), last_ratio_(last_ratio), step_(step) {}

    double last_ratio() const noexcept { return last_ratio_; }
    int step() const noexcept { return step_; }

private:
    double last_ratio_;
    int step_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

} // namespace spde
