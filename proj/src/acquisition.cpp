#include "rbo/acquisition.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rbo/errors.hpp"

namespace rbo {

namespace {

void require_order(const PosteriorMoments& m, int order, const char* who) {
    if (m.order < order) {
        throw ContractViolation(std::string(who) + ": posterior moments of order " +
                                std::to_string(order) + " are required");
    }
    if (m.sd == 0.0) throw DegenerateVariance(std::string(who) + ": posterior sd is zero");
}

/// z_{,i}
Vector z_grad(const PosteriorMoments& m, double z) {
    return (-(*m.grad_mean) - (*m.grad_sd) * z) / m.sd;
}

/// z_{,ij}
Matrix z_hess(const PosteriorMoments& m, double z, const Vector& zg) {
    const Vector& sg = *m.grad_sd;
    Matrix cross = sg * zg.transpose();
    return (-(*m.hess_mean) - (*m.hess_sd) * z - cross - cross.transpose()) / m.sd;
}

}  // namespace

double normal_pdf(double z) { return std::exp(-0.5 * z * z) * std::numbers::inv_sqrtpi / std::numbers::sqrt2; }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

EIQuantities ei_quantities(const PosteriorMoments& m, double f_best, double xi) {
    EIQuantities q;
    q.xi = xi;
    const double gain = f_best - m.mean - xi;
    if (m.sd == 0.0) {
        q.value = std::max(gain, 0.0);
        return q;
    }
    q.z = gain / m.sd;
    q.gp1 = normal_cdf(q.z);
    q.gp2 = normal_pdf(q.z);
    q.g = q.z * q.gp1 + q.gp2;
    q.value = m.sd * q.g;
    return q;
}

double ei(const PosteriorMoments& m, double f_best, double xi) { return ei_quantities(m, f_best, xi).value; }

Vector ei_grad(const PosteriorMoments& m, double f_best, double xi) {
    require_order(m, 1, "ei_grad");
    const EIQuantities q = ei_quantities(m, f_best, xi);
    return (*m.grad_sd) * q.g + m.sd * q.gp1 * z_grad(m, q.z);
}

Matrix ei_hess(const PosteriorMoments& m, double f_best, double xi) {
    require_order(m, 2, "ei_hess");
    const EIQuantities q = ei_quantities(m, f_best, xi);
    const Vector zg = z_grad(m, q.z);
    const Matrix zh = z_hess(m, q.z, zg);
    Matrix sz = (*m.grad_sd) * zg.transpose();
    Matrix h = (*m.hess_sd) * q.g + (sz + sz.transpose() + m.sd * zh) * q.gp1 +
               (m.sd * q.gp2) * zg * zg.transpose();
    return 0.5 * (h + h.transpose());
}

EIMixed ei_mixed_data(const PosteriorMoments& m, const MomentTangent& dot, double f_best, double xi,
                      double f_best_dot) {
    require_order(m, 1, "ei_mixed_data");
    const EIQuantities q = ei_quantities(m, f_best, xi);
    const Vector& sg = *m.grad_sd;
    const Vector zg = z_grad(m, q.z);
    const double zdot = (f_best_dot - dot.mean - dot.sd * q.z) / m.sd;
    const Vector zg_dot = (-dot.grad_mean - dot.grad_sd * q.z - dot.sd * zg - sg * zdot) / m.sd;

    EIMixed out;
    out.value = dot.sd * q.g + m.sd * q.gp1 * zdot;
    out.grad = dot.grad_sd * q.g + sg * (q.gp1 * zdot) + zg * (dot.sd * q.gp1) +
               zg * (m.sd * q.gp2 * zdot) + zg_dot * (m.sd * q.gp1);
    return out;
}

double poi(const PosteriorMoments& m, double f_best, double xi) {
    if (m.sd == 0.0) throw DegenerateVariance("poi: posterior sd is zero");
    return normal_cdf((f_best - m.mean - xi) / m.sd);
}

Vector poi_grad(const PosteriorMoments& m, double f_best, double xi) {
    require_order(m, 1, "poi_grad");
    const double z = (f_best - m.mean - xi) / m.sd;
    return normal_pdf(z) * z_grad(m, z);
}

Matrix poi_hess(const PosteriorMoments& m, double f_best, double xi) {
    require_order(m, 2, "poi_hess");
    const double z = (f_best - m.mean - xi) / m.sd;
    const Vector zg = z_grad(m, z);
    Matrix h = normal_pdf(z) * (z_hess(m, z, zg) - z * zg * zg.transpose());
    return 0.5 * (h + h.transpose());
}

double ucb(const PosteriorMoments& m, double beta) {
    if (!(beta >= 0.0)) throw ContractViolation("ucb: beta must be non-negative");
    return -m.mean + std::sqrt(beta) * m.sd;
}

Vector ucb_grad(const PosteriorMoments& m, double beta) {
    require_order(m, 1, "ucb_grad");
    return -(*m.grad_mean) + std::sqrt(beta) * (*m.grad_sd);
}

Matrix ucb_hess(const PosteriorMoments& m, double beta) {
    require_order(m, 2, "ucb_hess");
    return -(*m.hess_mean) + std::sqrt(beta) * (*m.hess_sd);
}

}  // namespace rbo
