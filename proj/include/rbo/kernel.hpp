#pragma once

#include <Eigen/Core>

namespace rbo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class KernelKind { matern52 };

/// Signal variance and per-dimension (ARD) lengthscales of a stationary kernel.
struct KernelParams {
    double amplitude = 1.0;
    Vector lengthscales;
    KernelKind kind = KernelKind::matern52;

    Index dim() const { return lengthscales.size(); }

    /// Throws ContractViolation unless amplitude > 0 and every lengthscale > 0.
    void validate() const;

    static KernelParams isotropic(Index dim, double amplitude, double lengthscale);
};

/// Radial profile psi(rho) and its first two derivatives.
struct RadialProfile {
    double psi = 0.0;
    double dpsi = 0.0;
    double ddpsi = 0.0;
};

struct ScaledDistance {
    double rho = 0.0;
    Vector r;  ///< (x - y) / lengthscales, coordinate-wise
};

/// Below this scaled distance the rho^{-1} factors switch to their Taylor limits.
inline constexpr double kSmallRho = 1e-8;

RadialProfile matern52_profile(double rho, double amplitude);

ScaledDistance scaled_distance(const Vector& x, const Vector& y, const KernelParams& params);

double eval(const Vector& x, const Vector& y, const KernelParams& params);

/// Gradient of k(x, y) with respect to x.
Vector grad(const Vector& x, const Vector& y, const KernelParams& params);

/// Hessian of k(x, y) with respect to x.
Matrix hess(const Vector& x, const Vector& y, const KernelParams& params);

/// Derivatives of k(x, y) = kappa(x - y) with respect to x, up to third order.
///
/// Matern 5/2 in scaled coordinates s = (x - y) / l has
///   kappa_{,i}   = A s_i / l_i
///   kappa_{,ij}  = (B s_i s_j + A delta_ij) / (l_i l_j)
///   kappa_{,ijl} = (B (delta_il s_j + delta_jl s_i + delta_ij s_l) - sqrt5 B s_i s_j s_l / rho)
///                  / (l_i l_j l_l)
/// with A = psi'/rho and B = (psi'' - psi'/rho)/rho^2, both of which are smooth at rho = 0.
class KernelDerivatives {
public:
    KernelDerivatives(const Vector& x, const Vector& y, const KernelParams& params);

    double value() const { return value_; }
    double d1(Index i) const;
    double d2(Index i, Index j) const;
    double d3(Index i, Index j, Index l) const;

    /// Derivative along the multi-index {i, j, l}; negative entries are skipped.
    double partial(int i, int j = -1, int l = -1) const;

    /// d k / d log(lengthscale_k) and d k / d log(amplitude).
    double dlog_lengthscale(Index k) const;
    double dlog_amplitude() const { return value_; }

    double rho() const { return rho_; }
    Index dim() const { return s_.size(); }

private:
    Vector s_;
    Vector inv_l_;
    double rho_ = 0.0;
    double value_ = 0.0;
    double a_ = 0.0;
    double b_ = 0.0;
};

/// Observation functional index: -1 is the function value, i >= 0 is d/dx_i.
inline constexpr int kValue = -1;

/// Covariance between functional `ia` of f at a and functional `ib` of f at b,
/// built from the derivatives of kappa evaluated at a - b.
///   (value, value)     k
///   (d_i, value)       k_{,i}
///   (value, d_j)      -k_{,j}
///   (d_i, d_j)        -k_{,ij}
double cross_cov(const KernelDerivatives& kd, int ia, int ib);

/// Same covariance evaluated directly from the two points, without building a
/// KernelDerivatives. Used on the hot paths of conditioning and posterior queries.
double cross_cov(Eigen::Ref<const Vector> a, Eigen::Ref<const Vector> b, const KernelParams& params, int ia, int ib);

/// d/da_l of cross_cov; the derivative with respect to b_l is its negation.
double cross_cov_da(const KernelDerivatives& kd, int ia, int ib, int l);

/// d/da_l of d/da_m of cross_cov (used for spatial Hessians of cross covariances).
double cross_cov_dada(const KernelDerivatives& kd, int ia, int ib, int l, int m);

}  // namespace rbo
