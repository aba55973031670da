#include "rbo/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "rbo/acquisition.hpp"
#include "rbo/errors.hpp"

namespace rbo {

namespace {

constexpr double kCvVarianceFloor = 1e-14;

Evaluation ei_objective(const GPState& state, double f_best, double xi, const Vector& x, int order) {
    const PosteriorMoments m = posterior(state, x, order);
    Evaluation e;
    e.value = ei(m, f_best, xi);
    if (order == 0) return e;
    e.grad = ei_grad(m, f_best, xi);
    if (order >= 2) e.hess = ei_hess(m, f_best, xi);
    return e;
}

/// Index of the incumbent value observation (first on ties).
Index incumbent_index(const GPState& s) {
    Index best = -1;
    for (Index o = 0; o < s.size(); ++o) {
        if (s.kind(o) != kValue) continue;
        if (best < 0 || s.observation(o) < s.observation(best)) best = o;
    }
    return best;
}

void flag(Trajectory& t, const std::string& reason) {
    t.flagged = true;
    t.flag_reason = reason;
}

double sample_variance(const Vector& v) {
    if (v.size() < 2) return 0.0;
    const double mean = v.mean();
    return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace

void RolloutConfig::validate() const {
    if (horizon < 0) throw ContractViolation("rollout: horizon must be non-negative");
    if (n_samples < 1) throw ContractViolation("rollout: at least one sample is required");
    domain.validate();
    if (inner.restarts < 1 || !(inner.grad_tol > 0.0) || inner.max_newton_iters < 1) {
        throw ContractViolation("rollout: invalid inner optimizer settings");
    }
    if (!(max_flagged_fraction >= 0.0 && max_flagged_fraction <= 1.0)) {
        throw ContractViolation("rollout: max_flagged_fraction must lie in [0, 1]");
    }
}

SampleStream make_stream(const RolloutConfig& cfg, Index dim, std::uint64_t seed) {
    QmcStream q;
    q.dim = cfg.stream_dim(dim);
    q.n = cfg.n_samples;
    q.seed = seed;
    q.mode = cfg.variance_reduction.qmc ? StreamMode::sobol : StreamMode::pseudorandom;
    return SampleStream{gaussian_points(q), seed};
}

Trajectory sample_trajectory(const GPState& gp, const Vector& x0, const RolloutConfig& cfg,
                             const Vector& row, std::uint64_t inner_seed) {
    const Index d = gp.dim();
    const int h = cfg.horizon;
    if (cfg.domain.dim() != d) throw ContractViolation("rollout: domain dimension mismatch");
    if (row.size() < cfg.stream_dim(d)) {
        throw ContractViolation("rollout: Gaussian row has " + std::to_string(row.size()) +
                                " entries, need " + std::to_string(cfg.stream_dim(d)));
    }
    if (!cfg.domain.contains(x0)) throw ContractViolation("rollout: start point outside the domain");
    InnerOptConfig inner = cfg.inner;
    inner.box = cfg.domain;

    Trajectory t;
    t.steps.reserve(static_cast<std::size_t>(h + 1));
    Vector z = row.segment(0, 1 + d);
    JointDraw draw = sample_joint(gp, x0, z);
    t.steps.push_back({x0, draw.value, draw.gradient, true, std::vector<bool>(static_cast<std::size_t>(d), false)});
    t.draws.push_back(std::move(draw));
    t.normals.push_back(z);
    if (h == 0) return t;

    t.values_chain.push_back(gp.condition(x0, t.steps[0].value));
    t.joint_chain.push_back(condition_with_gradient(gp, x0, t.steps[0].value, t.steps[0].gradient).state());
    for (int r = 1; r <= h; ++r) {
        const GPState& f_state = t.values_chain.back();
        const double fb = f_state.f_best();
        const SmoothObjective objective = [&](const Vector& x, int order) {
            return ei_objective(f_state, fb, cfg.xi, x, order);
        };
        Rng rng(mix_seed(inner_seed, static_cast<std::uint64_t>(r)));
        InnerResult res = inner_maximize(objective, inner, rng);

        z = row.segment(static_cast<Index>(r) * (1 + d), 1 + d);
        draw = sample_joint(t.joint_chain.back(), res.x, z);
        t.steps.push_back({res.x, draw.value, draw.gradient, res.stationary, res.pinned});
        t.draws.push_back(std::move(draw));
        t.normals.push_back(z);
        if (r < h) {
            const TrajectoryStep& s = t.steps.back();
            t.values_chain.push_back(f_state.condition(s.x, s.value));
            t.joint_chain.push_back(condition_with_gradient(t.joint_chain.back(), s.x, s.value, s.gradient).state());
        }
    }
    return t;
}

TrajectoryMin trajectory_min(Trajectory& t, double f_best) {
    if (t.steps.empty()) throw ContractViolation("trajectory_min: empty trajectory");
    TrajectoryMin out;
    for (std::size_t j = 1; j < t.steps.size(); ++j) {
        if (t.steps[j].value < t.steps[static_cast<std::size_t>(out.best_index)].value) out.best_index = static_cast<Index>(j);
    }
    out.improvement = std::max(f_best - t.steps[static_cast<std::size_t>(out.best_index)].value, 0.0);
    t.best_index = out.best_index;
    t.improvement = out.improvement;
    return out;
}

void trajectory_jacobian(const GPState& gp, Trajectory& t, const RolloutConfig& cfg, Index upto) {
    const Index d = gp.dim();
    const Index h = t.horizon();
    if (upto < 0) upto = h;
    if (upto > h) throw ContractViolation("trajectory_jacobian: step index past the horizon");
    const Index m = gp.size();
    const bool pathwise = cfg.gradient == GradientEstimator::pathwise;
    t.jacobians.clear();
    t.value_dots.clear();
    t.grad_dots.clear();
    t.flagged = false;
    t.flag_reason.clear();

    // Step 0: the start point moves with x itself.
    const TrajectoryStep& s0 = t.steps[0];
    t.jacobians.push_back(Matrix::Identity(d, d));
    Vector fdot0(d);
    Matrix gdot0 = Matrix::Zero(d, d);
    if (pathwise) {
        const JointDraw& draw = t.draws[0];
        if (draw.degenerate) return flag(t, "singular joint covariance at the start point");
        const DataTangent none{Vector::Zero(m), Matrix::Zero(d, m)};
        for (Index k = 0; k < d; ++k) {
            const JointTangent jt = joint_posterior_tangent(gp, draw.posterior, s0.x, Vector::Unit(d, k), none);
            const Vector tan = jt.mean + cholesky_tangent(draw.factor, jt.cov) * t.normals[0];
            fdot0[k] = tan[0];
            gdot0.col(k) = tan.tail(d);
        }
    } else {
        fdot0 = s0.gradient;
    }
    t.value_dots.push_back(fdot0);
    t.grad_dots.push_back(gdot0);

    for (Index r = 1; r <= upto; ++r) {
        const TrajectoryStep& s = t.steps[static_cast<std::size_t>(r)];
        if (!s.stationary) return flag(t, "inner argmax is not stationary at step " + std::to_string(r));
        const GPState& f_state = t.values_chain[static_cast<std::size_t>(r - 1)];
        const double fb = f_state.f_best();
        const Index inc = incumbent_index(f_state);
        const Index inc_fantasy = inc >= m ? inc - m : -1;

        PosteriorMoments mom;
        Matrix hess;
        try {
            mom = posterior(f_state, s.x, 2);
            hess = ei_hess(mom, fb, cfg.xi);
        } catch (const DegenerateVariance&) {
            return flag(t, "degenerate posterior variance at step " + std::to_string(r));
        }

        std::vector<Index> free;
        for (Index i = 0; i < d; ++i) {
            if (!s.pinned[static_cast<std::size_t>(i)]) free.push_back(i);
        }
        const auto nf = static_cast<Index>(free.size());
        Matrix h_ff(nf, nf);
        for (Index a = 0; a < nf; ++a) {
            for (Index b = 0; b < nf; ++b) h_ff(a, b) = hess(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
        }
        Eigen::SelfAdjointEigenSolver<Matrix> eig;
        if (nf > 0) {
            eig.compute(h_ff);
            const Vector lam = eig.eigenvalues().cwiseAbs();
            if (!(lam.minCoeff() > 0.0) || lam.maxCoeff() / lam.minCoeff() > cfg.max_condition) {
                return flag(t, "ill-conditioned inner Hessian at step " + std::to_string(r));
            }
        }

        const Index nF = f_state.size();
        DataTangent tf{Vector::Zero(nF), Matrix::Zero(d, nF)};
        Matrix jac = Matrix::Zero(d, d);
        for (Index k = 0; k < d; ++k) {
            for (Index j = 0; j < r; ++j) {
                tf.values[m + j] = t.value_dots[static_cast<std::size_t>(j)][k];
                tf.locations.col(m + j) = t.jacobians[static_cast<std::size_t>(j)].col(k);
            }
            const double fb_dot = inc_fantasy >= 0 ? t.value_dots[static_cast<std::size_t>(inc_fantasy)][k] : 0.0;
            const MomentTangent mt = posterior_data_tangent(f_state, mom, s.x, tf);
            const EIMixed mix = ei_mixed_data(mom, mt, fb, cfg.xi, fb_dot);
            if (nf == 0) continue;
            Vector rhs(nf);
            for (Index a = 0; a < nf; ++a) rhs[a] = -mix.grad[free[static_cast<std::size_t>(a)]];
            const Vector sol = eig.eigenvectors() *
                               (eig.eigenvalues().cwiseInverse().asDiagonal() * (eig.eigenvectors().transpose() * rhs));
            for (Index a = 0; a < nf; ++a) jac(free[static_cast<std::size_t>(a)], k) = sol[a];
        }
        t.jacobians.push_back(jac);

        Vector fdot(d);
        Matrix gdot = Matrix::Zero(d, d);
        if (pathwise) {
            const JointDraw& draw = t.draws[static_cast<std::size_t>(r)];
            if (draw.degenerate) return flag(t, "singular joint covariance at step " + std::to_string(r));
            const GPState& g_state = t.joint_chain[static_cast<std::size_t>(r - 1)];
            const Index nG = g_state.size();
            DataTangent tg{Vector::Zero(nG), Matrix::Zero(d, nG)};
            for (Index k = 0; k < d; ++k) {
                for (Index j = 0; j < r; ++j) {
                    const Index base = m + j * (1 + d);
                    tg.values[base] = t.value_dots[static_cast<std::size_t>(j)][k];
                    tg.values.segment(base + 1, d) = t.grad_dots[static_cast<std::size_t>(j)].col(k);
                    for (Index a = 0; a <= d; ++a) tg.locations.col(base + a) = t.jacobians[static_cast<std::size_t>(j)].col(k);
                }
                const JointTangent jt = joint_posterior_tangent(g_state, draw.posterior, s.x, jac.col(k), tg);
                const Vector tan = jt.mean + cholesky_tangent(draw.factor, jt.cov) * t.normals[static_cast<std::size_t>(r)];
                fdot[k] = tan[0];
                gdot.col(k) = tan.tail(d);
            }
        } else {
            fdot = jac.transpose() * s.gradient;
        }
        t.value_dots.push_back(fdot);
        t.grad_dots.push_back(gdot);
    }
}

Vector trajectory_grad(const GPState& gp, Trajectory& t, const RolloutConfig& cfg, double f_best) {
    const TrajectoryMin tm = trajectory_min(t, f_best);
    const Index d = gp.dim();
    if (tm.improvement <= 0.0) {
        t.flagged = false;
        return Vector::Zero(d);
    }
    trajectory_jacobian(gp, t, cfg, tm.best_index);
    if (t.flagged) return Vector::Zero(d);
    return -t.value_dots[static_cast<std::size_t>(tm.best_index)];
}

ControlVariateResult apply_control_variate(const Vector& improvements, const Vector& one_step, double ei_value) {
    if (improvements.size() != one_step.size()) {
        throw ContractViolation("control variate: sample vectors differ in length");
    }
    ControlVariateResult out;
    out.adjusted = improvements;
    const Index n = improvements.size();
    if (n < 2) return out;
    const Vector w = (one_step.array() - ei_value).matrix();
    const double var_w = sample_variance(w);
    if (var_w <= kCvVarianceFloor) return out;
    const double cov = ((improvements.array() - improvements.mean()) * (w.array() - w.mean())).sum() /
                       static_cast<double>(n - 1);
    out.beta = -cov / var_w;
    out.adjusted = improvements + out.beta * w;
    out.applied = true;
    return out;
}

RolloutEstimate rollout_value_and_grad(const GPState& gp, const Vector& x, const RolloutConfig& cfg,
                                       const SampleStream& stream, bool want_grad) {
    cfg.validate();
    const Index d = gp.dim();
    const Index n = stream.normals.rows();
    if (n < 1) throw ContractViolation("rollout: empty sample stream");
    if (stream.normals.cols() < cfg.stream_dim(d)) {
        throw ContractViolation("rollout: sample stream is too narrow for the horizon");
    }
    const double f_best = gp.f_best();
    if (!std::isfinite(f_best)) throw ContractViolation("rollout: the GP has no value observations");

    RolloutEstimate est;
    est.improvements.resize(n);
    Vector one_step(n);
    std::vector<Vector> grads;
    if (want_grad) grads.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const Vector row = stream.normals.row(i).transpose();
        Trajectory t = sample_trajectory(gp, x, cfg, row, mix_seed(stream.seed, static_cast<std::uint64_t>(i)));
        const TrajectoryMin tm = trajectory_min(t, f_best);
        est.improvements[i] = tm.improvement;
        one_step[i] = std::max(f_best - t.steps[0].value, 0.0);
        if (!want_grad) continue;
        const Vector g = trajectory_grad(gp, t, cfg, f_best);
        if (t.flagged) {
            ++est.n_flagged;
        } else {
            grads.push_back(g);
        }
    }
    est.n_used = n;
    est.se_defined = n >= 2;

    est.adjusted = est.improvements;
    if (cfg.variance_reduction.control_variate) {
        const double ei0 = ei(posterior(gp, x, 0), f_best, 0.0);
        ControlVariateResult cv = apply_control_variate(est.improvements, one_step, ei0);
        est.adjusted = std::move(cv.adjusted);
        est.beta_cv = cv.beta;
        est.cv_applied = cv.applied;
    }
    est.value = est.adjusted.mean();
    est.value_se = std::sqrt(sample_variance(est.adjusted) / static_cast<double>(n));

    est.grad = Vector::Zero(d);
    est.grad_se = Vector::Zero(d);
    if (!want_grad) return est;
    if (static_cast<double>(est.n_flagged) > cfg.max_flagged_fraction * static_cast<double>(n)) {
        throw EstimatorDegraded("rollout: " + std::to_string(est.n_flagged) + " of " + std::to_string(n) +
                                    " trajectories were flagged",
                                static_cast<std::size_t>(est.n_flagged), static_cast<std::size_t>(n));
    }
    const auto ng = static_cast<Index>(grads.size());
    if (ng == 0) return est;
    for (const Vector& g : grads) est.grad += g;
    est.grad /= static_cast<double>(ng);
    if (ng >= 2) {
        for (const Vector& g : grads) est.grad_se += (g - est.grad).cwiseAbs2();
        est.grad_se = (est.grad_se / static_cast<double>((ng - 1) * ng)).cwiseSqrt();
    }
    return est;
}

}  // namespace rbo
