#pragma once

#include "rbo/gp.hpp"

namespace rbo {

double normal_pdf(double z);
double normal_cdf(double z);

/// Standardized improvement and the scalar EI profile g(z) = z Phi(z) + phi(z).
struct EIQuantities {
    double z = 0.0;
    double g = 0.0;
    double gp1 = 0.0;  ///< g'(z) = Phi(z)
    double gp2 = 0.0;  ///< g''(z) = phi(z)
    double xi = 0.0;
    double value = 0.0;
};

/// Minimization convention: z = (f_best - mu - xi) / sigma. With sigma = 0 the value is
/// the deterministic limit max(f_best - mu - xi, 0) and z is left at 0.
EIQuantities ei_quantities(const PosteriorMoments& m, double f_best, double xi = 0.0);

double ei(const PosteriorMoments& m, double f_best, double xi = 0.0);
Vector ei_grad(const PosteriorMoments& m, double f_best, double xi = 0.0);
Matrix ei_hess(const PosteriorMoments& m, double f_best, double xi = 0.0);

/// Directional derivative of (EI, grad EI) along a data perturbation.
struct EIMixed {
    double value = 0.0;
    Vector grad;
};

/// `dot` is the posterior tangent (gp::posterior_data_tangent or one entry of
/// posterior_data_derivatives); f_best_dot is the rate at which the incumbent moves.
EIMixed ei_mixed_data(const PosteriorMoments& m, const MomentTangent& dot, double f_best,
                      double xi = 0.0, double f_best_dot = 0.0);

double poi(const PosteriorMoments& m, double f_best, double xi = 0.0);
Vector poi_grad(const PosteriorMoments& m, double f_best, double xi = 0.0);
Matrix poi_hess(const PosteriorMoments& m, double f_best, double xi = 0.0);

inline constexpr double kDefaultUcbBeta = 4.0;

/// -mu + sqrt(beta) sigma, to be maximized.
double ucb(const PosteriorMoments& m, double beta);
Vector ucb_grad(const PosteriorMoments& m, double beta);
Matrix ucb_hess(const PosteriorMoments& m, double beta);

}  // namespace rbo
