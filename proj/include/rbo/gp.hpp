#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "rbo/kernel.hpp"

namespace rbo {

/// Known sample locations (columns of X) with their observations.
struct Dataset {
    Matrix X;  ///< d x m
    Vector y;  ///< m
    double f_best = 0.0;

    Dataset() = default;
    Dataset(Matrix X, Vector y);

    Index dim() const { return X.rows(); }
    Index size() const { return X.cols(); }
};

/// Posterior of the latent value at one point, with optional spatial derivatives.
struct PosteriorMoments {
    int order = 0;
    double mean = 0.0;
    double sd = 0.0;
    double var = 0.0;
    std::optional<Vector> grad_mean;
    std::optional<Vector> grad_sd;
    std::optional<Matrix> hess_mean;
    std::optional<Matrix> hess_sd;

    // Workspace kept for data-derivatives.
    Vector kvec;   ///< cov(observations, f(x))
    Vector dvec;   ///< K^{-1} kvec
    Matrix kgrad;  ///< column i: d kvec / d x_i   (order >= 1)
    Matrix wmat;   ///< column i: K^{-1} kgrad_i  (order >= 1)
};

/// Joint posterior of (f(x), grad f(x)).
struct JointPosterior {
    Vector mean;   ///< 1 + d
    Matrix cov;    ///< (1 + d) x (1 + d)
    Matrix cross;  ///< n x (1 + d): cov(observations, (f, grad f)(x))
    Matrix solved; ///< K^{-1} cross
};

/// Simultaneous first-order perturbation of every observation (values and locations).
struct DataTangent {
    Vector values;     ///< n
    Matrix locations;  ///< d x n
};

/// Directional derivative of the posterior moments (and their spatial gradients)
/// along a DataTangent.
struct MomentTangent {
    double mean = 0.0;
    double sd = 0.0;
    Vector grad_mean;
    Vector grad_sd;
};

/// Derivatives of the posterior at x with respect to one observation's value and,
/// component by component, its location.
struct ObservationDerivatives {
    MomentTangent value;
    std::vector<MomentTangent> location;
};

struct JointTangent {
    Vector mean;
    Matrix cov;
};

/// Gaussian process posterior over a set of linear observations of f.
///
/// Each observation is either a value f(x_o) or a partial derivative d f / d x_i at
/// x_o. The Cholesky factor of K + diag(noise) lives in a preallocated buffer and is
/// extended by Schur complement; condition() never mutates the receiver.
class GPState {
public:
    GPState() = default;

    /// Condition the prior on values y at the columns of X. All of these observations
    /// are immutable (data-derivatives with respect to them are rejected).
    static GPState fit(const Matrix& X, const Vector& y, const KernelParams& params,
                       double noise, Index capacity = 0);

    /// Prior-only state of the given input dimension.
    static GPState prior(Index dim, const KernelParams& params, double noise, Index capacity = 0);

    /// Append one noiseless value observation in O(n^2).
    GPState condition(const Vector& x, double y) const;

    /// Append a block of observations (kind per column, see kValue) in O(n^2 k).
    GPState condition_block(const Matrix& X, const std::vector<int>& kinds, const Vector& y,
                            double noise) const;

    Index dim() const { return params_.dim(); }
    Index size() const { return n_; }
    Index capacity() const { return L_.rows(); }
    Index num_fixed() const { return n_fixed_; }

    const KernelParams& params() const { return params_; }
    double noise() const { return noise_; }

    auto location(Index o) const { return X_.col(o); }
    int kind(Index o) const { return kinds_[static_cast<std::size_t>(o)]; }
    double observation(Index o) const { return y_[o]; }
    double observation_noise(Index o) const { return obs_noise_[o]; }
    bool values_only() const;

    /// Minimum over value observations (+inf when there are none).
    double f_best() const;

    Matrix chol() const { return L_.topLeftCorner(n_, n_); }
    Vector coeffs() const { return c_.head(n_); }
    Dataset dataset() const;

    /// (K + diag(noise))^{-1} b for an n-vector or n x k matrix b.
    Matrix solve(const Matrix& b) const;
    Vector solve(const Vector& b) const;

    /// Observation covariance matrix K + diag(noise), rebuilt from scratch.
    Matrix covariance() const;

    /// Prior covariance cov(f(x), observation o) and its spatial derivatives.
    double cross(const Vector& x, Index o) const;

private:
    void refactor(double jitter_start);
    void update_coeffs();
    void grow(Index needed);

    KernelParams params_;
    double noise_ = 0.0;
    Matrix X_;
    std::vector<int> kinds_;
    Vector y_;
    Vector obs_noise_;
    Matrix L_;
    Vector c_;
    Index n_ = 0;
    Index n_fixed_ = 0;
};

/// Posterior variances below this fraction of the amplitude are clamped to zero.
inline constexpr double kVarianceFloor = 1e-12;

/// Posterior moments at x with spatial derivatives up to `order` (0, 1 or 2).
PosteriorMoments posterior(const GPState& state, const Vector& x, int order);

JointPosterior joint_posterior(const GPState& state, const Vector& x);

/// Derivatives of the posterior at x under a perturbation of all observations.
/// Requires moments of order >= 1 computed at the same x.
MomentTangent posterior_data_tangent(const GPState& state, const PosteriorMoments& moments,
                                     const Vector& x, const DataTangent& tangent);

/// Data-derivatives with respect to observation j, which must be a fantasy
/// (mutable) observation, i.e. j >= state.num_fixed().
ObservationDerivatives posterior_data_derivatives(const GPState& state, const Vector& x, Index j);

/// Directional derivative of the joint (value, gradient) posterior at x when both the
/// query point (x_dot) and the observations (tangent) move.
JointTangent joint_posterior_tangent(const GPState& state, const JointPosterior& joint,
                                     const Vector& x, const Vector& x_dot,
                                     const DataTangent& tangent);

/// Cholesky factor of a covariance matrix, following the jitter schedule.
/// Throws NonPositiveDefinite carrying the last jitter tried.
Matrix cholesky_with_jitter(const Matrix& cov, double scale, double* jitter_used = nullptr);

/// Lower factor L of a positive semidefinite matrix (L L^T = cov); pivots below
/// tol * scale are zeroed. Falls back to the jitter schedule for indefinite input.
Matrix psd_cholesky(const Matrix& cov, double scale, bool* degenerate = nullptr);

/// Derivative of L = chol(S) given dS: L * Phi(L^{-1} dS L^{-T}).
Matrix cholesky_tangent(const Matrix& L, const Matrix& cov_dot);

/// A GP additionally conditioned on sampled (value, gradient) pairs.
class FantasyGP {
public:
    FantasyGP() = default;
    explicit FantasyGP(GPState base);

    FantasyGP condition_with_gradient(const Vector& x, double value, const Vector& gradient) const;

    const GPState& state() const { return state_; }
    Index num_fantasies() const { return static_cast<Index>(points_.size()); }
    const std::vector<Vector>& points() const { return points_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<Vector>& gradients() const { return gradients_; }

private:
    GPState state_;
    std::vector<Vector> points_;
    std::vector<double> values_;
    std::vector<Vector> gradients_;
};

FantasyGP condition_with_gradient(const GPState& state, const Vector& x, double value,
                                  const Vector& gradient);

/// One draw of (f(x), grad f(x)) from the joint posterior: mean + chol(cov) z.
struct JointDraw {
    double value = 0.0;
    Vector gradient;
    JointPosterior posterior;
    Matrix factor;
    bool degenerate = false;  ///< a pivot of the factor was clamped to zero
};

JointDraw sample_joint(const GPState& state, const Vector& x, const Vector& z);
JointDraw sample_joint(const FantasyGP& fgp, const Vector& x, const Vector& z);

/// Options for maximum-likelihood hyperparameter fitting.
struct HyperFitOptions {
    int restarts = 4;
    double lower = 1e-3;  ///< box on amplitude and lengthscales
    double upper = 1e3;
    int max_iters = 200;
    std::uint64_t seed = 0;
    std::optional<KernelParams> warm_start;
};

/// Log marginal likelihood of y (zero prior mean) and, optionally, its gradient with
/// respect to (log amplitude, log lengthscales).
double log_marginal_likelihood(const Matrix& X, const Vector& y, const KernelParams& params,
                               double noise, Vector* grad_log = nullptr);

/// Multistart maximum likelihood over (amplitude, lengthscales) in a log-space box.
/// y is centered before fitting; noise is held at noise_floor.
KernelParams fit_hypers(const Matrix& X, const Vector& y, double noise_floor,
                        const HyperFitOptions& options = {});

}  // namespace rbo
