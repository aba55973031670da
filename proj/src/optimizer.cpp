#include "rbo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "rbo/errors.hpp"

namespace rbo {

namespace {

constexpr double kPolishTol = 1e-11;
constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 40;

bool try_eval(const SmoothObjective& f, const Vector& x, Evaluation& out) {
    try {
        out = f(x, 2);
    } catch (const DegenerateVariance&) {
        return false;
    }
    return std::isfinite(out.value) && out.grad.allFinite() && out.hess.allFinite();
}

/// Coordinates on the box with the gradient pointing outward.
std::vector<bool> pinned_mask(const Box& box, const Vector& x, const Vector& g) {
    std::vector<bool> pinned(static_cast<std::size_t>(x.size()));
    for (Index i = 0; i < x.size(); ++i) {
        pinned[static_cast<std::size_t>(i)] =
            (x[i] <= box.lower[i] && g[i] < 0.0) || (x[i] >= box.upper[i] && g[i] > 0.0);
    }
    return pinned;
}

double projected_grad_norm(const Vector& g, const std::vector<bool>& pinned) {
    double n = 0.0;
    for (Index i = 0; i < g.size(); ++i) {
        if (!pinned[static_cast<std::size_t>(i)]) n = std::max(n, std::abs(g[i]));
    }
    return n;
}

/// Ascent direction from the eigenvalue-reflected Hessian on the free coordinates.
Vector newton_direction(const Evaluation& e, const std::vector<bool>& pinned) {
    const Index d = e.grad.size();
    std::vector<Index> free;
    for (Index i = 0; i < d; ++i) {
        if (!pinned[static_cast<std::size_t>(i)]) free.push_back(i);
    }
    Vector p = Vector::Zero(d);
    if (free.empty()) return p;
    const auto nf = static_cast<Index>(free.size());
    Matrix h(nf, nf);
    Vector g(nf);
    for (Index a = 0; a < nf; ++a) {
        g[a] = e.grad[free[static_cast<std::size_t>(a)]];
        for (Index b = 0; b < nf; ++b) h(a, b) = e.hess(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
    const Vector lam = eig.eigenvalues().cwiseAbs();
    const double floor = std::max(1e-8 * lam.maxCoeff(), 1e-300);
    const Vector inv = lam.cwiseMax(floor).cwiseInverse();
    const Vector pf = eig.eigenvectors() * inv.asDiagonal() * (eig.eigenvectors().transpose() * g);
    for (Index a = 0; a < nf; ++a) p[free[static_cast<std::size_t>(a)]] = pf[a];
    return p;
}

}  // namespace

void Box::validate() const {
    if (lower.size() != upper.size() || lower.size() == 0) throw ContractViolation("box: bad dimensions");
    if (!lower.allFinite() || !upper.allFinite()) throw ContractViolation("box: bounds must be finite");
    for (Index i = 0; i < lower.size(); ++i) {
        if (!(lower[i] < upper[i])) throw ContractViolation("box: lower must be below upper");
    }
}

bool Box::contains(const Vector& x) const {
    return x.size() == dim() && (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

Vector Box::project(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

Vector Box::uniform(Rng& rng) const {
    Vector x(dim());
    for (Index i = 0; i < dim(); ++i) x[i] = lower[i] + uniform01(rng) * (upper[i] - lower[i]);
    return x;
}

Box Box::unit(Index dim) { return Box{Vector::Zero(dim), Vector::Ones(dim)}; }

InnerResult newton_maximize(const SmoothObjective& objective, const Vector& x0, const InnerOptConfig& cfg) {
    const Box& box = cfg.box;
    InnerResult r;
    r.x = box.project(x0);
    Evaluation e;
    if (!try_eval(objective, r.x, e)) {
        r.value = -std::numeric_limits<double>::infinity();
        r.pinned.assign(static_cast<std::size_t>(box.dim()), false);
        return r;
    }
    const double width = (box.upper - box.lower).maxCoeff();
    std::vector<bool> pinned = pinned_mask(box, r.x, e.grad);
    for (int it = 0; it < cfg.max_newton_iters; ++it) {
        const double pg = projected_grad_norm(e.grad, pinned);
        if (pg <= kPolishTol) break;
        Vector p = newton_direction(e, pinned);
        const double pn = p.cwiseAbs().maxCoeff();
        if (pn > width) p *= width / pn;

        bool accepted = false;
        Evaluation en;
        Vector xn;
        double t = 1.0;
        for (int k = 0; k < kMaxHalvings; ++k, t *= 0.5) {
            xn = box.project(r.x + t * p);
            if (!try_eval(objective, xn, en)) continue;
            const double gain = en.value - e.value;
            if (gain >= kArmijo * e.grad.dot(xn - r.x)) {
                accepted = true;
                break;
            }
            // Near the optimum the value change drowns in roundoff; accept gradient progress.
            if (std::abs(gain) <= 1e-14 * (1.0 + std::abs(e.value)) &&
                projected_grad_norm(en.grad, pinned_mask(box, xn, en.grad)) < pg) {
                accepted = true;
                break;
            }
        }
        r.iterations = it + 1;
        if (!accepted) break;
        const double moved = (xn - r.x).cwiseAbs().maxCoeff();
        r.x = xn;
        e = en;
        pinned = pinned_mask(box, r.x, e.grad);
        if (moved <= 1e-15 * (1.0 + width)) break;
    }
    r.value = e.value;
    r.grad = e.grad;
    r.hess = e.hess;
    r.pinned = pinned;
    r.stationary = projected_grad_norm(e.grad, pinned) <= cfg.grad_tol;
    return r;
}

InnerResult inner_maximize(const SmoothObjective& objective, const InnerOptConfig& cfg, Rng& rng) {
    cfg.box.validate();
    if (!(cfg.grad_tol > 0.0)) throw ContractViolation("inner_maximize: grad_tol must be positive");
    if (cfg.restarts < 1) throw ContractViolation("inner_maximize: at least one restart is required");
    if (cfg.raw_samples < 0) throw ContractViolation("inner_maximize: raw_samples must be non-negative");

    // Value-only screen; Newton starts from the best candidates.
    std::vector<std::pair<double, Vector>> candidates;
    const int n_raw = std::max(cfg.raw_samples, cfg.restarts);
    candidates.reserve(static_cast<std::size_t>(n_raw));
    for (int s = 0; s < n_raw; ++s) {
        Vector x = cfg.box.uniform(rng);
        double v = -std::numeric_limits<double>::infinity();
        if (cfg.raw_samples > 0) {
            try {
                v = objective(x, 0).value;
            } catch (const DegenerateVariance&) {
            }
            if (!std::isfinite(v)) v = -std::numeric_limits<double>::infinity();
        }
        candidates.emplace_back(v, std::move(x));
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    InnerResult best_any;
    InnerResult best_stationary;
    best_any.value = best_stationary.value = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < cfg.restarts; ++s) {
        InnerResult r = newton_maximize(objective, candidates[static_cast<std::size_t>(s)].second, cfg);
        if (r.stationary && (best_stationary.x.size() == 0 || r.value > best_stationary.value)) best_stationary = r;
        if (best_any.x.size() == 0 || r.value > best_any.value) best_any = std::move(r);
    }
    return best_stationary.x.size() > 0 ? best_stationary : best_any;
}

void AdamConfig::validate() const {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ContractViolation("adam: beta1 and beta2 must lie in [0, 1)");
    }
    if (max_iters < 1 || restarts < 1) throw ContractViolation("adam: max_iters and restarts must be >= 1");
    if (!(epsilon > 0.0)) throw ContractViolation("adam: epsilon must be positive");
}

AdamResult adam_maximize(const StochasticObjective& objective, const Vector& x0, const AdamConfig& cfg,
                         const Box& box) {
    cfg.validate();
    box.validate();
    const Index d = box.dim();
    if (x0.size() != d) throw ContractViolation("adam: start point dimension mismatch");
    const double step = cfg.step_size > 0.0 ? cfg.step_size : 0.1 * box.diagonal() / std::sqrt(static_cast<double>(d));

    AdamResult out;
    out.x = box.project(x0);
    out.value = -std::numeric_limits<double>::infinity();
    Vector x = out.x;
    Vector m = Vector::Zero(d);
    Vector v = Vector::Zero(d);
    double b1t = 1.0;
    double b2t = 1.0;
    int small = 0;
    for (int t = 1; t <= cfg.max_iters; ++t) {
        StochasticEvaluation ev;
        try {
            ev = objective(x);
        } catch (const std::runtime_error&) {
            out.aborted = true;
            break;
        }
        out.iterations = t;
        if (!std::isfinite(ev.value) || ev.grad.size() != d || !ev.grad.allFinite()) {
            out.aborted = true;
            break;
        }
        if (ev.value > out.value) {
            out.value = ev.value;
            out.x = x;
        }
        if (ev.grad.cwiseAbs().maxCoeff() <= cfg.grad_tol) {
            if (++small >= 3) {
                out.converged = true;
                break;
            }
        } else {
            small = 0;
        }
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * ev.grad;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * ev.grad.cwiseAbs2();
        const Vector mhat = m / (1.0 - b1t);
        const Vector vhat = v / (1.0 - b2t);
        x = box.project(x + step * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + cfg.epsilon).matrix()));
    }
    return out;
}

}  // namespace rbo
