#include "rbo/kernel.hpp"

#include <cmath>
#include <string>

#include "rbo/errors.hpp"

namespace rbo {

namespace {

constexpr double kSqrt5 = 2.23606797749978969640917366873128;

void check_dims(const Vector& x, const Vector& y, const KernelParams& params) {
    if (x.size() != params.dim() || y.size() != params.dim()) {
        throw ContractViolation("kernel: point dimension " + std::to_string(x.size()) + "/" +
                                std::to_string(y.size()) + " does not match " +
                                std::to_string(params.dim()) + " lengthscales");
    }
}

inline double delta(Index i, Index j) { return i == j ? 1.0 : 0.0; }

}  // namespace

void KernelParams::validate() const {
    if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
        throw ContractViolation("kernel: amplitude must be positive and finite");
    }
    if (lengthscales.size() == 0) {
        throw ContractViolation("kernel: at least one lengthscale is required");
    }
    for (Index k = 0; k < lengthscales.size(); ++k) {
        if (!(lengthscales[k] > 0.0) || !std::isfinite(lengthscales[k])) {
            throw ContractViolation("kernel: lengthscales must be positive and finite");
        }
    }
}

KernelParams KernelParams::isotropic(Index dim, double amplitude, double lengthscale) {
    KernelParams p;
    p.amplitude = amplitude;
    p.lengthscales = Vector::Constant(dim, lengthscale);
    return p;
}

RadialProfile matern52_profile(double rho, double amplitude) {
    const double e = std::exp(-kSqrt5 * rho);
    RadialProfile p;
    p.psi = amplitude * (1.0 + kSqrt5 * rho + 5.0 / 3.0 * rho * rho) * e;
    p.dpsi = -5.0 / 3.0 * amplitude * rho * (1.0 + kSqrt5 * rho) * e;
    p.ddpsi = -5.0 / 3.0 * amplitude * (1.0 + kSqrt5 * rho - 5.0 * rho * rho) * e;
    return p;
}

ScaledDistance scaled_distance(const Vector& x, const Vector& y, const KernelParams& params) {
    check_dims(x, y, params);
    ScaledDistance out;
    out.r = (x - y).cwiseQuotient(params.lengthscales);
    out.rho = out.r.norm();
    return out;
}

KernelDerivatives::KernelDerivatives(const Vector& x, const Vector& y, const KernelParams& params) {
    check_dims(x, y, params);
    inv_l_ = params.lengthscales.cwiseInverse();
    s_ = (x - y).cwiseProduct(inv_l_);
    rho_ = s_.norm();
    const double amp = params.amplitude;
    const double e = std::exp(-kSqrt5 * rho_);
    value_ = amp * (1.0 + kSqrt5 * rho_ + 5.0 / 3.0 * rho_ * rho_) * e;
    a_ = -5.0 / 3.0 * amp * (1.0 + kSqrt5 * rho_) * e;
    b_ = 25.0 / 3.0 * amp * e;
}

double KernelDerivatives::d1(Index i) const { return a_ * s_[i] * inv_l_[i]; }

double KernelDerivatives::d2(Index i, Index j) const {
    return (b_ * s_[i] * s_[j] + a_ * delta(i, j)) * inv_l_[i] * inv_l_[j];
}

double KernelDerivatives::d3(Index i, Index j, Index l) const {
    double v = b_ * (delta(i, l) * s_[j] + delta(j, l) * s_[i] + delta(i, j) * s_[l]);
    // The remaining term is O(rho^2); its rho^{-1} factor is dropped at the origin.
    if (rho_ >= kSmallRho) {
        v -= kSqrt5 * b_ * s_[i] * s_[j] * s_[l] / rho_;
    }
    return v * inv_l_[i] * inv_l_[j] * inv_l_[l];
}

double KernelDerivatives::partial(int i, int j, int l) const {
    int idx[3];
    int n = 0;
    for (int v : {i, j, l}) {
        if (v >= 0) idx[n++] = v;
    }
    switch (n) {
        case 0: return value_;
        case 1: return d1(idx[0]);
        case 2: return d2(idx[0], idx[1]);
        default: return d3(idx[0], idx[1], idx[2]);
    }
}

double KernelDerivatives::dlog_lengthscale(Index k) const { return -a_ * s_[k] * s_[k]; }

double cross_cov(const KernelDerivatives& kd, int ia, int ib) {
    const double sign = ib >= 0 ? -1.0 : 1.0;
    return sign * kd.partial(ia, ib);
}

double cross_cov(Eigen::Ref<const Vector> a, Eigen::Ref<const Vector> b, const KernelParams& params, int ia, int ib) {
    const Index d = params.dim();
    if (a.size() != d || b.size() != d) {
        throw ContractViolation("kernel: point dimension " + std::to_string(a.size()) + "/" +
                                std::to_string(b.size()) + " does not match " + std::to_string(d) +
                                " lengthscales");
    }
    const Vector& l = params.lengthscales;
    double r2 = 0.0;
    for (Index k = 0; k < d; ++k) {
        const double t = (a[k] - b[k]) / l[k];
        r2 += t * t;
    }
    const double rho = std::sqrt(r2);
    const double amp = params.amplitude;
    const double e = std::exp(-kSqrt5 * rho);
    if (ia < 0 && ib < 0) return amp * (1.0 + kSqrt5 * rho + 5.0 / 3.0 * r2) * e;
    const double A = -5.0 / 3.0 * amp * (1.0 + kSqrt5 * rho) * e;
    if (ib < 0) return A * (a[ia] - b[ia]) / (l[ia] * l[ia]);
    if (ia < 0) return -A * (a[ib] - b[ib]) / (l[ib] * l[ib]);
    const double B = 25.0 / 3.0 * amp * e;
    const double si = (a[ia] - b[ia]) / l[ia];
    const double sj = (a[ib] - b[ib]) / l[ib];
    return -(B * si * sj + A * delta(ia, ib)) / (l[ia] * l[ib]);
}

double cross_cov_da(const KernelDerivatives& kd, int ia, int ib, int l) {
    const double sign = ib >= 0 ? -1.0 : 1.0;
    return sign * kd.partial(ia, ib, l);
}

double cross_cov_dada(const KernelDerivatives& kd, int ia, int ib, int l, int m) {
    if (ia >= 0 && ib >= 0) {
        throw ContractViolation("kernel: fourth derivatives are not available");
    }
    const double sign = ib >= 0 ? -1.0 : 1.0;
    return sign * kd.partial(ia >= 0 ? ia : ib, l, m);
}

double eval(const Vector& x, const Vector& y, const KernelParams& params) {
    const ScaledDistance sd = scaled_distance(x, y, params);
    return matern52_profile(sd.rho, params.amplitude).psi;
}

Vector grad(const Vector& x, const Vector& y, const KernelParams& params) {
    const KernelDerivatives kd(x, y, params);
    Vector g(kd.dim());
    for (Index i = 0; i < g.size(); ++i) g[i] = kd.d1(i);
    return g;
}

Matrix hess(const Vector& x, const Vector& y, const KernelParams& params) {
    const KernelDerivatives kd(x, y, params);
    const Index d = kd.dim();
    Matrix h(d, d);
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j <= i; ++j) {
            h(i, j) = h(j, i) = kd.d2(i, j);
        }
    }
    return h;
}

}  // namespace rbo
