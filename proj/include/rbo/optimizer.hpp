#pragma once

#include <functional>
#include <vector>

#include "rbo/kernel.hpp"
#include "rbo/random.hpp"

namespace rbo {

/// Axis-aligned box.
struct Box {
    Vector lower;
    Vector upper;

    Index dim() const { return lower.size(); }
    void validate() const;
    bool contains(const Vector& x) const;
    Vector project(const Vector& x) const;
    Vector uniform(Rng& rng) const;
    double diagonal() const { return (upper - lower).norm(); }

    static Box unit(Index dim);
};

/// Value, gradient and (when requested) Hessian of an objective to be maximized.
struct Evaluation {
    double value = 0.0;
    Vector grad;
    Matrix hess;
};

/// Objective callable; `order` is 0 (value only), 1 (value and gradient) or 2 (plus
/// Hessian). Throwing DegenerateVariance marks the point as infeasible.
using SmoothObjective = std::function<Evaluation(const Vector& x, int order)>;

struct InnerOptConfig {
    int restarts = 8;
    int raw_samples = 64;  ///< value-only screen; restarts begin at the best of these
    double grad_tol = 1e-3;
    int max_newton_iters = 50;
    Box box;
};

struct InnerResult {
    Vector x;
    double value = 0.0;
    Vector grad;
    Matrix hess;
    bool stationary = false;
    std::vector<bool> pinned;  ///< coordinate sits on the box with the gradient pushing out
    int iterations = 0;
};

/// Multistart projected Newton ascent from the best raw samples. The Hessian is made negative definite by
/// reflecting and flooring its eigenvalues; steps use Armijo backtracking. Each
/// restart is polished well past grad_tol; grad_tol certifies stationarity.
InnerResult inner_maximize(const SmoothObjective& objective, const InnerOptConfig& cfg, Rng& rng);

/// Single Newton run from a given start.
InnerResult newton_maximize(const SmoothObjective& objective, const Vector& x0, const InnerOptConfig& cfg);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double step_size = 0.0;  ///< <= 0 selects 0.1 * box diagonal / sqrt(d)
    int max_iters = 50;
    int restarts = 8;
    double grad_tol = 1e-4;

    void validate() const;
};

struct StochasticEvaluation {
    double value = 0.0;
    Vector grad;
    double se = 0.0;
};

using StochasticObjective = std::function<StochasticEvaluation(const Vector& x)>;

struct AdamResult {
    Vector x;             ///< best-valued iterate
    double value = 0.0;   ///< its estimated value
    int iterations = 0;
    bool aborted = false; ///< stopped on a non-finite gradient or a failed evaluation
    bool converged = false;
};

/// Projected Adam ascent. Stops after max_iters or three consecutive iterations with
/// ||grad||_inf <= grad_tol. Evaluation failures (exceptions derived from
/// std::runtime_error) and non-finite gradients end the run.
AdamResult adam_maximize(const StochasticObjective& objective, const Vector& x0, const AdamConfig& cfg,
                         const Box& box);

}  // namespace rbo
