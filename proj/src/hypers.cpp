// Maximum-likelihood fitting of kernel hyperparameters.
//
// The log marginal likelihood and its gradient are computed here; the quasi-Newton
// iteration is delegated to GSL's BFGS2 minimizer. The log-space box is enforced with
// a tanh reparameterization so the minimizer can run unconstrained.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "rbo/errors.hpp"
#include "rbo/gp.hpp"
#include "rbo/random.hpp"

namespace rbo {

double log_marginal_likelihood(const Matrix& X, const Vector& y, const KernelParams& params,
                               double noise, Vector* grad_log) {
    const Index m = X.cols();
    const Index d = X.rows();
    Matrix k(m, m);
    for (Index p = 0; p < m; ++p) {
        for (Index q = 0; q <= p; ++q) k(p, q) = k(q, p) = eval(X.col(p), X.col(q), params);
    }
    Matrix kn = k;
    kn.diagonal().array() += noise;
    const Matrix lower = cholesky_with_jitter(kn, params.amplitude);
    const auto tri = lower.triangularView<Eigen::Lower>();
    Vector alpha = tri.solve(y);
    const double quad = alpha.squaredNorm();
    tri.transpose().solveInPlace(alpha);
    const double logdet = 2.0 * lower.diagonal().array().log().sum();
    const double lml = -0.5 * quad - 0.5 * logdet - 0.5 * static_cast<double>(m) * std::log(2.0 * std::numbers::pi);

    if (grad_log) {
        Matrix kinv = tri.solve(Matrix::Identity(m, m));
        kinv = tri.transpose().solve(kinv);
        const Matrix w = alpha * alpha.transpose() - kinv;
        grad_log->setZero(1 + d);
        for (Index p = 0; p < m; ++p) {
            for (Index q = 0; q < m; ++q) {
                const KernelDerivatives kd(X.col(p), X.col(q), params);
                (*grad_log)[0] += w(p, q) * kd.dlog_amplitude();
                for (Index l = 0; l < d; ++l) (*grad_log)[1 + l] += w(p, q) * kd.dlog_lengthscale(l);
            }
        }
        *grad_log *= 0.5;
    }
    return lml;
}

namespace {

struct Problem {
    const Matrix* X;
    const Vector* y;
    double noise;
    double mid;
    double half;
};

Vector to_log(const Problem& pb, const gsl_vector* u) {
    Vector t(static_cast<Index>(u->size));
    for (Index i = 0; i < t.size(); ++i) t[i] = pb.mid + pb.half * std::tanh(gsl_vector_get(u, static_cast<std::size_t>(i)));
    return t;
}

KernelParams from_log(const Vector& t) {
    KernelParams p;
    p.amplitude = std::exp(t[0]);
    p.lengthscales = t.tail(t.size() - 1).array().exp();
    return p;
}

constexpr double kFailedValue = 1e100;

double negative_lml(const Problem& pb, const gsl_vector* u, gsl_vector* g) {
    const Vector t = to_log(pb, u);
    Vector grad;
    double value;
    try {
        value = -log_marginal_likelihood(*pb.X, *pb.y, from_log(t), pb.noise, g ? &grad : nullptr);
    } catch (const NonPositiveDefinite&) {
        if (g) gsl_vector_set_zero(g);
        return kFailedValue;
    }
    if (g) {
        for (Index i = 0; i < t.size(); ++i) {
            const double th = std::tanh(gsl_vector_get(u, static_cast<std::size_t>(i)));
            gsl_vector_set(g, static_cast<std::size_t>(i), -grad[i] * pb.half * (1.0 - th * th));
        }
    }
    return value;
}

double f_cb(const gsl_vector* u, void* p) { return negative_lml(*static_cast<Problem*>(p), u, nullptr); }
void df_cb(const gsl_vector* u, void* p, gsl_vector* g) { negative_lml(*static_cast<Problem*>(p), u, g); }
void fdf_cb(const gsl_vector* u, void* p, double* f, gsl_vector* g) {
    *f = negative_lml(*static_cast<Problem*>(p), u, g);
}

struct GslVector {
    explicit GslVector(std::size_t n) : v(gsl_vector_alloc(n)) {}
    ~GslVector() { gsl_vector_free(v); }
    GslVector(const GslVector&) = delete;
    GslVector& operator=(const GslVector&) = delete;
    gsl_vector* v;
};

struct GslMinimizer {
    explicit GslMinimizer(std::size_t n)
        : s(gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n)) {}
    ~GslMinimizer() { gsl_multimin_fdfminimizer_free(s); }
    GslMinimizer(const GslMinimizer&) = delete;
    GslMinimizer& operator=(const GslMinimizer&) = delete;
    gsl_multimin_fdfminimizer* s;
};

/// Returns (negative lml, log params) at the end of one local search.
std::pair<double, Vector> local_search(Problem& pb, const Vector& start_log, int max_iters) {
    const std::size_t n = static_cast<std::size_t>(start_log.size());
    GslVector u(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::clamp((start_log[static_cast<Index>(i)] - pb.mid) / pb.half, -0.999, 0.999);
        gsl_vector_set(u.v, i, std::atanh(r));
    }
    gsl_multimin_function_fdf fn;
    fn.n = n;
    fn.f = f_cb;
    fn.df = df_cb;
    fn.fdf = fdf_cb;
    fn.params = &pb;

    GslMinimizer minim(n);
    gsl_multimin_fdfminimizer_set(minim.s, &fn, u.v, 0.1, 0.1);
    for (int it = 0; it < max_iters; ++it) {
        if (gsl_multimin_fdfminimizer_iterate(minim.s) != GSL_SUCCESS) break;
        if (gsl_multimin_test_gradient(minim.s->gradient, 1e-6) == GSL_SUCCESS) break;
    }
    return {minim.s->f, to_log(pb, minim.s->x)};
}

}  // namespace

KernelParams fit_hypers(const Matrix& X, const Vector& y, double noise_floor,
                        const HyperFitOptions& options) {
    if (X.cols() < 2) throw ContractViolation("fit_hypers: at least two observations are required");
    if (X.cols() != y.size()) throw ContractViolation("fit_hypers: X and y sizes differ");
    if (!(options.lower > 0.0) || !(options.upper > options.lower)) {
        throw ContractViolation("fit_hypers: invalid hyperparameter box");
    }
    gsl_set_error_handler_off();

    const Index d = X.rows();
    const Vector yc = (y.array() - y.mean()).matrix();
    Problem pb{&X, &yc, noise_floor, 0.5 * (std::log(options.lower) + std::log(options.upper)),
               0.5 * (std::log(options.upper) - std::log(options.lower))};
    const double lo = std::log(options.lower);
    const double hi = std::log(options.upper);

    std::vector<Vector> starts;
    if (options.warm_start) {
        if (options.warm_start->dim() != d) throw ContractViolation("fit_hypers: warm start dimension mismatch");
        Vector t(1 + d);
        t[0] = std::log(options.warm_start->amplitude);
        t.tail(d) = options.warm_start->lengthscales.array().log();
        starts.push_back(t.cwiseMax(lo).cwiseMin(hi));
    }
    {
        const double var = yc.squaredNorm() / static_cast<double>(yc.size());
        Vector span = (X.rowwise().maxCoeff() - X.rowwise().minCoeff()).cwiseMax(1e-3);
        Vector t(1 + d);
        t[0] = std::log(std::clamp(var, options.lower, options.upper));
        t.tail(d) = (0.5 * span).array().log();
        starts.push_back(t.cwiseMax(lo).cwiseMin(hi));
    }
    Rng rng(options.seed);
    while (static_cast<int>(starts.size()) < std::max(options.restarts, 1)) {
        Vector t(1 + d);
        t[0] = std::log(std::clamp(yc.squaredNorm() / static_cast<double>(yc.size()), options.lower, options.upper)) +
               (uniform01(rng) - 0.5) * 2.0;
        for (Index l = 0; l < d; ++l) t[1 + l] = std::log(1e-2) + uniform01(rng) * (std::log(2.0) - std::log(1e-2));
        starts.push_back(t.cwiseMax(lo).cwiseMin(hi));
    }

    double best = std::numeric_limits<double>::infinity();
    Vector best_log;
    for (const Vector& s : starts) {
        auto [value, t] = local_search(pb, s, options.max_iters);
        if (value < best && value < kFailedValue) {
            best = value;
            best_log = t;
        }
    }
    if (best_log.size() == 0) {
        throw NonPositiveDefinite("fit_hypers: every start failed to factor the covariance", 0.0);
    }
    return from_log(best_log);
}

}  // namespace rbo
