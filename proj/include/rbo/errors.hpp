#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rbo {

/// Caller broke a documented precondition (dimension mismatch, bad index, ...).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A covariance matrix could not be factored even after the jitter schedule.
class NonPositiveDefinite : public std::runtime_error {
public:
    NonPositiveDefinite(const std::string& what, double jitter)
        : std::runtime_error(what), jitter_(jitter) {}

    /// Largest diagonal jitter that was tried.
    double jitter() const noexcept { return jitter_; }

private:
    double jitter_;
};

/// Posterior standard deviation too small for sigma^{-1} dependent derivatives.
class DegenerateVariance : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnsupportedDimension : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Too many rollout trajectories were flagged to trust the gradient estimate.
class EstimatorDegraded : public std::runtime_error {
public:
    EstimatorDegraded(const std::string& what, std::size_t flagged, std::size_t total)
        : std::runtime_error(what), flagged_(flagged), total_(total) {}

    std::size_t flagged() const noexcept { return flagged_; }
    std::size_t total() const noexcept { return total_; }

private:
    std::size_t flagged_;
    std::size_t total_;
};

class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rbo
