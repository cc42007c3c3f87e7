#pragma once

#include <stdexcept>
#include <string>

namespace vastop {

/// Argument outside the domain of a function, e.g. t > T or x <= 0.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid scenario, grid or run configuration. Carries the offending field path when known.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg, std::string field = {})
        : std::runtime_error(field.empty() ? msg : field + ": " + msg), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// The requested combination of fee/charge kinds is not supported by a routine.
class UnsupportedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A numerical solver failed (non-convergence, grid too coarse, ...).
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& msg, double residual = 0.0)
        : std::runtime_error(msg), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace vastop
