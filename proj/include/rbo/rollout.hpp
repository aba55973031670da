#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbo/gp.hpp"
#include "rbo/optimizer.hpp"
#include "rbo/sampler.hpp"

namespace rbo {

enum class BasePolicy { ei };

/// How the per-trajectory gradient is formed.
///   pathwise:    exact derivative of the trajectory minimum with the Gaussian row held
///                fixed, propagated forward through every fantasy draw and inner argmax.
///   sample_path: treats the fantasies as one sample path, d f_j = grad f_j . d x^j, and
///                returns -(grad f_b)^T dx^b/dx.
enum class GradientEstimator { pathwise, sample_path };

struct VarianceReduction {
    bool qmc = true;
    bool crn = true;
    bool control_variate = true;
};

struct RolloutConfig {
    int horizon = 1;
    Index n_samples = 64;
    BasePolicy base_policy = BasePolicy::ei;
    double xi = 0.0;
    VarianceReduction variance_reduction;
    InnerOptConfig inner;  ///< its box is replaced by `domain`
    Box domain;
    GradientEstimator gradient = GradientEstimator::pathwise;
    double max_flagged_fraction = 0.2;
    double max_condition = 1e12;

    void validate() const;
    /// Gaussian coordinates consumed per trajectory.
    Index stream_dim(Index d) const { return static_cast<Index>(horizon + 1) * (1 + d); }
};

/// Gaussian rows shared by every evaluation that should see common random numbers.
struct SampleStream {
    RowMatrix normals;
    std::uint64_t seed = 0;
};

SampleStream make_stream(const RolloutConfig& cfg, Index dim, std::uint64_t seed);

struct TrajectoryStep {
    Vector x;
    double value = 0.0;
    Vector gradient;
    bool stationary = true;
    std::vector<bool> pinned;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;  ///< steps[0] is the start point
    std::vector<GPState> values_chain;  ///< F_j: base conditioned on values f_0..f_j
    std::vector<GPState> joint_chain;   ///< G_j: base conditioned on (f_k, grad f_k), k <= j
    std::vector<JointDraw> draws;       ///< the joint posterior each step was drawn from
    std::vector<Vector> normals;        ///< the (1 + d) slice used at each step

    // Filled by trajectory_min.
    Index best_index = 0;
    double improvement = 0.0;

    // Filled by trajectory_jacobian, for steps 0..jacobian_upto.
    std::vector<Matrix> jacobians;    ///< dx^j/dx
    std::vector<Vector> value_dots;   ///< d f_j / dx
    std::vector<Matrix> grad_dots;    ///< column k: d grad f_j / dx_k (pathwise only)
    bool flagged = false;
    std::string flag_reason;

    Index horizon() const { return static_cast<Index>(steps.size()) - 1; }
};

/// Roll the base policy forward h steps from x0. `row` holds at least (h+1)(1+d)
/// standard normals; inner restarts are seeded from inner_seed so that the same row and
/// seed reproduce the same trajectory.
Trajectory sample_trajectory(const GPState& gp, const Vector& x0, const RolloutConfig& cfg,
                             const Vector& row, std::uint64_t inner_seed = 0);

struct TrajectoryMin {
    Index best_index = 0;
    double improvement = 0.0;
};

/// argmin_j f_j (first index on ties) and (f_best - min_j f_j)^+. Also stored in t.
TrajectoryMin trajectory_min(Trajectory& t, double f_best);

/// Chain dx^j/dx and the fantasy tangents for j = 0..upto (default: whole trajectory).
/// Sets t.flagged when a needed step is non-stationary, has an ill-conditioned
/// Hessian, or drew from a clamped (singular) covariance factor.
void trajectory_jacobian(const GPState& gp, Trajectory& t, const RolloutConfig& cfg, Index upto = -1);

/// Gradient of the improvement (f_best - min_j f_j)^+ with respect to x0.
/// Computes the Jacobians it needs; zero when the improvement is zero.
Vector trajectory_grad(const GPState& gp, Trajectory& t, const RolloutConfig& cfg, double f_best);

struct ControlVariateResult {
    Vector adjusted;
    double beta = 0.0;
    bool applied = false;
};

/// w_i = one_step_i - ei_value; adjusted_i = improvements_i + beta w_i with
/// beta = -Cov(improvements, w) / Var(w). Var(w) <= 1e-14 leaves the samples unchanged.
ControlVariateResult apply_control_variate(const Vector& improvements, const Vector& one_step,
                                           double ei_value);

struct RolloutEstimate {
    double value = 0.0;
    double value_se = 0.0;
    Vector grad;
    Vector grad_se;
    double beta_cv = 0.0;
    bool cv_applied = false;
    Index n_used = 0;
    Index n_flagged = 0;
    bool se_defined = true;  ///< false for a single sample
    Vector improvements;     ///< raw per-trajectory improvements
    Vector adjusted;         ///< after the control variate (equal to improvements when off)
};

/// Monte Carlo estimate of the h-step rollout acquisition at x and, when want_grad is
/// set, of its gradient. Throws EstimatorDegraded when more than max_flagged_fraction
/// of the trajectories needed for the gradient are flagged.
RolloutEstimate rollout_value_and_grad(const GPState& gp, const Vector& x, const RolloutConfig& cfg,
                                       const SampleStream& stream, bool want_grad = true);

}  // namespace rbo
