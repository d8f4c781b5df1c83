#pragma once

#include <stdexcept>
#include <string>

namespace covarlab {

// Invalid configuration or malformed input. CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Caller broke an API contract (length mismatch, nonpositive scale, ...).
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Adaptive quadrature did not reach the requested tolerance.
// Carries the error estimate that was achieved before giving up.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_error(achieved) {}
    double achieved_error;
};

// Numerical failure in linear algebra (e.g. covariance not PSD within the
// jitter budget). CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what, double min_eigenvalue = 0.0)
        : std::runtime_error(what), min_eigenvalue(min_eigenvalue) {}
    double min_eigenvalue;
};

// Requested a limit that does not exist (e.g. g(0+) for a kernel that blows
// up at zero).
class UndefinedLimitError : public std::runtime_error {
public:
    explicit UndefinedLimitError(const std::string& what) : std::runtime_error(what) {}
};

// A convergence study was requested whose hypotheses fail the audit and
// force was not set. CLI maps this to exit code 4.
class HypothesisViolation : public std::runtime_error {
public:
    explicit HypothesisViolation(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace covarlab
