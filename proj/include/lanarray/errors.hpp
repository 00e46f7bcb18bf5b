#pragma once

#include <stdexcept>
#include <string>

namespace lanarray {

// Every failure the library signals derives from Error so the CLI can map
// categories to exit codes without string matching.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function (H ∉ (0,1), λ = 0, α ≥ 1).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Parameter vector outside the open parameter space of its model.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Caller broke a documented precondition (shape mismatch, symmetry, singular R_n).
class ContractError : public Error {
public:
    using Error::Error;
};

class UnsupportedError : public Error {
public:
    using Error::Error;
};

class DegenerateDataError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Unknown model id or unusable model parameters in a configuration.
class ModelError : public Error {
public:
    using Error::Error;
};

/// Cholesky breakdown. Carries the offending pivot so the caller can tell a
/// non-positive symbol from quadrature noise.
class FactorizationError : public Error {
public:
    FactorizationError(const std::string& what, double pivot, long index)
        : Error(what + " (smallest pivot " + std::to_string(pivot) + " at row " +
                std::to_string(index) + ")"),
          pivot_(pivot), index_(index) {}

    double pivot() const noexcept { return pivot_; }
    long index() const noexcept { return index_; }

private:
    double pivot_;
    long index_;
};

} // namespace lanarray
