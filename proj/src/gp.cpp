#include "rbo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "rbo/errors.hpp"

namespace rbo {

namespace {

constexpr double kJitterStart = 1e-10;
constexpr int kJitterSteps = 5;

bool try_llt(const Matrix& a, Matrix& lower) {
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) return false;
    lower = llt.matrixL();
    return lower.allFinite();
}

double obs_cov(const GPState& s, Index o, Index p) {
    return cross_cov(s.location(o), s.location(p), s.params(), s.kind(o), s.kind(p));
}

/// dK/dt for a perturbation of observation locations.
Matrix covariance_tangent(const GPState& s, const Matrix& loc_dot) {
    const Index n = s.size();
    const Index d = s.dim();
    Matrix kdot = Matrix::Zero(n, n);
    Vector diff(d);
    for (Index o = 0; o < n; ++o) {
        for (Index p = o + 1; p < n; ++p) {
            diff = loc_dot.col(o) - loc_dot.col(p);
            if (diff.isZero(0.0)) continue;
            const KernelDerivatives kd(s.location(o), s.location(p), s.params());
            double v = 0.0;
            for (Index l = 0; l < d; ++l) {
                if (diff[l] != 0.0) v += cross_cov_da(kd, s.kind(o), s.kind(p), static_cast<int>(l)) * diff[l];
            }
            kdot(o, p) = kdot(p, o) = v;
        }
    }
    return kdot;
}

void check_tangent(const GPState& s, const DataTangent& t) {
    if (t.values.size() != s.size() || t.locations.cols() != s.size() ||
        t.locations.rows() != s.dim()) {
        throw ContractViolation("gp: data tangent does not match the observation set");
    }
}

}  // namespace

Dataset::Dataset(Matrix X_in, Vector y_in) : X(std::move(X_in)), y(std::move(y_in)) {
    if (X.cols() != y.size()) {
        throw ContractViolation("dataset: X has " + std::to_string(X.cols()) + " columns but y has " +
                                std::to_string(y.size()) + " entries");
    }
    if (!X.allFinite()) throw ContractViolation("dataset: non-finite sample location");
    f_best = y.size() > 0 ? y.minCoeff() : std::numeric_limits<double>::infinity();
}

Matrix cholesky_with_jitter(const Matrix& cov, double scale, double* jitter_used) {
    Matrix lower;
    if (try_llt(cov, lower)) {
        if (jitter_used) *jitter_used = 0.0;
        return lower;
    }
    double jitter = kJitterStart * scale;
    for (int step = 0; step < kJitterSteps; ++step, jitter *= 10.0) {
        Matrix a = cov;
        a.diagonal().array() += jitter;
        if (try_llt(a, lower)) {
            if (jitter_used) *jitter_used = jitter;
            return lower;
        }
    }
    throw NonPositiveDefinite("covariance is not positive definite after jitter " +
                                  std::to_string(jitter / 10.0),
                              jitter / 10.0);
}

Matrix psd_cholesky(const Matrix& cov, double scale, bool* degenerate) {
    const Index n = cov.rows();
    Matrix lower = Matrix::Zero(n, n);
    bool clamped = false;
    for (Index j = 0; j < n; ++j) {
        double pivot = cov(j, j) - lower.row(j).head(j).squaredNorm();
        if (pivot <= kVarianceFloor * scale) {
            if (pivot < -1e-8 * scale) {
                if (degenerate) *degenerate = false;
                return cholesky_with_jitter(cov, scale);
            }
            clamped = true;
            continue;
        }
        const double ljj = std::sqrt(pivot);
        lower(j, j) = ljj;
        for (Index i = j + 1; i < n; ++i) {
            lower(i, j) = (cov(i, j) - lower.row(i).head(j).dot(lower.row(j).head(j))) / ljj;
        }
    }
    if (degenerate) *degenerate = clamped;
    return lower;
}

Matrix cholesky_tangent(const Matrix& L, const Matrix& cov_dot) {
    const auto tri = L.triangularView<Eigen::Lower>();
    Matrix m = tri.solve(cov_dot);
    m = tri.solve(m.transpose()).transpose();
    Matrix phi = m.triangularView<Eigen::StrictlyLower>();
    phi.diagonal() = 0.5 * m.diagonal();
    return L * phi;
}

GPState GPState::prior(Index dim, const KernelParams& params, double noise, Index capacity) {
    return fit(Matrix(dim, 0), Vector(0), params, noise, capacity);
}

GPState GPState::fit(const Matrix& X, const Vector& y, const KernelParams& params, double noise,
                     Index capacity) {
    params.validate();
    if (X.rows() != params.dim()) {
        throw ContractViolation("gp: inputs have dimension " + std::to_string(X.rows()) +
                                " but the kernel has " + std::to_string(params.dim()));
    }
    if (X.cols() != y.size()) throw ContractViolation("gp: X and y sizes differ");
    if (!(noise >= 0.0)) throw ContractViolation("gp: noise variance must be non-negative");
    if (!X.allFinite() || !y.allFinite()) throw ContractViolation("gp: non-finite training data");

    GPState s;
    s.params_ = params;
    s.noise_ = noise;
    const Index m = X.cols();
    const Index cap = std::max<Index>({capacity, m, 1});
    s.X_ = Matrix::Zero(X.rows(), cap);
    s.X_.leftCols(m) = X;
    s.kinds_.assign(static_cast<std::size_t>(m), kValue);
    s.y_ = Vector::Zero(cap);
    s.y_.head(m) = y;
    s.obs_noise_ = Vector::Zero(cap);
    s.obs_noise_.head(m).setConstant(noise);
    s.L_ = Matrix::Zero(cap, cap);
    s.c_ = Vector::Zero(cap);
    s.n_ = m;
    s.n_fixed_ = m;
    if (m > 0) s.refactor(0.0);
    return s;
}

void GPState::refactor(double jitter_start) {
    Matrix k = covariance();
    Matrix lower;
    if (jitter_start == 0.0 && try_llt(k, lower)) {
        L_.topLeftCorner(n_, n_) = lower;
        update_coeffs();
        return;
    }
    double jitter = kJitterStart * params_.amplitude;
    for (int step = 0; step < kJitterSteps; ++step, jitter *= 10.0) {
        Matrix a = k;
        a.diagonal().array() += jitter;
        if (try_llt(a, lower)) {
            obs_noise_.head(n_).array() += jitter;
            L_.topLeftCorner(n_, n_) = lower;
            update_coeffs();
            return;
        }
    }
    throw NonPositiveDefinite("gp: K + noise is not positive definite after jitter " +
                                  std::to_string(jitter / 10.0),
                              jitter / 10.0);
}

void GPState::update_coeffs() {
    c_.head(n_) = solve(Vector(y_.head(n_)));
}

void GPState::grow(Index needed) {
    const Index cap = capacity();
    if (needed <= cap) return;
    const Index new_cap = std::max(needed, 2 * cap);
    Matrix X = Matrix::Zero(X_.rows(), new_cap);
    X.leftCols(n_) = X_.leftCols(n_);
    X_.swap(X);
    Vector y = Vector::Zero(new_cap);
    y.head(n_) = y_.head(n_);
    y_.swap(y);
    Vector nz = Vector::Zero(new_cap);
    nz.head(n_) = obs_noise_.head(n_);
    obs_noise_.swap(nz);
    Matrix L = Matrix::Zero(new_cap, new_cap);
    L.topLeftCorner(n_, n_) = L_.topLeftCorner(n_, n_);
    L_.swap(L);
    Vector c = Vector::Zero(new_cap);
    c.head(n_) = c_.head(n_);
    c_.swap(c);
}

GPState GPState::condition(const Vector& x, double y) const {
    Matrix X(x.size(), 1);
    X.col(0) = x;
    return condition_block(X, {kValue}, Vector::Constant(1, y), 0.0);
}

GPState GPState::condition_block(const Matrix& X, const std::vector<int>& kinds, const Vector& y,
                                 double noise) const {
    const Index k = X.cols();
    if (X.rows() != dim() || static_cast<Index>(kinds.size()) != k || y.size() != k) {
        throw ContractViolation("gp: condition block has inconsistent shapes");
    }
    for (int kind : kinds) {
        if (kind < kValue || kind >= dim()) throw ContractViolation("gp: bad observation kind");
    }
    if (!X.allFinite() || !y.allFinite()) throw ContractViolation("gp: non-finite observation");

    GPState s = *this;
    s.grow(n_ + k);
    const Index n = n_;
    for (Index j = 0; j < k; ++j) {
        s.X_.col(n + j) = X.col(j);
        s.kinds_.push_back(kinds[static_cast<std::size_t>(j)]);
        s.y_[n + j] = y[j];
        s.obs_noise_[n + j] = noise;
    }
    s.n_ = n + k;

    // Schur complement: [L 0; B^T S] with B = L^{-1} K_on and S = chol(K_nn - B^T B).
    Matrix k_on(n, k);
    for (Index o = 0; o < n; ++o) {
        for (Index j = 0; j < k; ++j) k_on(o, j) = obs_cov(s, o, n + j);
    }
    Matrix k_nn(k, k);
    for (Index i = 0; i < k; ++i) {
        for (Index j = 0; j <= i; ++j) k_nn(i, j) = k_nn(j, i) = obs_cov(s, n + i, n + j);
        k_nn(i, i) += noise;
    }
    Matrix b = n > 0 ? Matrix(L_.topLeftCorner(n, n).triangularView<Eigen::Lower>().solve(k_on))
                     : Matrix(0, k);
    Matrix schur = k_nn - b.transpose() * b;
    Matrix ls;
    if (try_llt(schur, ls)) {
        s.L_.block(n, 0, k, n) = b.transpose();
        s.L_.block(n, n, k, k) = ls;
        s.L_.block(0, n, n, k).setZero();
        s.update_coeffs();
    } else {
        s.refactor(kJitterStart);
    }
    return s;
}

bool GPState::values_only() const {
    return std::all_of(kinds_.begin(), kinds_.end(), [](int k) { return k == kValue; });
}

double GPState::f_best() const {
    double best = std::numeric_limits<double>::infinity();
    for (Index o = 0; o < n_; ++o) {
        if (kind(o) == kValue) best = std::min(best, y_[o]);
    }
    return best;
}

Dataset GPState::dataset() const {
    std::vector<Index> idx;
    for (Index o = 0; o < n_; ++o) {
        if (kind(o) == kValue) idx.push_back(o);
    }
    Matrix X(dim(), static_cast<Index>(idx.size()));
    Vector y(static_cast<Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        X.col(static_cast<Index>(i)) = X_.col(idx[i]);
        y[static_cast<Index>(i)] = y_[idx[i]];
    }
    return Dataset(std::move(X), std::move(y));
}

Matrix GPState::solve(const Matrix& b) const {
    if (b.rows() != n_) throw ContractViolation("gp: solve with wrong number of rows");
    if (n_ == 0) return b;
    const auto tri = L_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>();
    Matrix out = tri.solve(b);
    tri.transpose().solveInPlace(out);
    return out;
}

Vector GPState::solve(const Vector& b) const {
    if (b.size() != n_) throw ContractViolation("gp: solve with wrong number of rows");
    if (n_ == 0) return b;
    const auto tri = L_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>();
    Vector out = b;
    tri.solveInPlace(out);
    tri.transpose().solveInPlace(out);
    return out;
}

Matrix GPState::covariance() const {
    Matrix k(n_, n_);
    for (Index o = 0; o < n_; ++o) {
        for (Index p = 0; p <= o; ++p) k(o, p) = k(p, o) = obs_cov(*this, o, p);
        k(o, o) += obs_noise_[o];
    }
    return k;
}

double GPState::cross(const Vector& x, Index o) const {
    return cross_cov(x, location(o), params_, kValue, kind(o));
}

PosteriorMoments posterior(const GPState& state, const Vector& x, int order) {
    if (order < 0 || order > 2) throw ContractViolation("gp: posterior order must be 0, 1 or 2");
    if (x.size() != state.dim()) throw ContractViolation("gp: query dimension mismatch");
    const Index n = state.size();
    const Index d = state.dim();
    const double amp = state.params().amplitude;

    PosteriorMoments m;
    m.order = order;
    m.kvec.resize(n);
    if (order >= 1) m.kgrad.resize(n, d);
    Matrix hmean, hd;
    if (order >= 2) {
        hmean = Matrix::Zero(d, d);
        hd = Matrix::Zero(d, d);
    }
    const Vector c = state.coeffs();
    std::vector<KernelDerivatives> kds;
    if (order == 0) {
        for (Index o = 0; o < n; ++o) m.kvec[o] = cross_cov(x, state.location(o), state.params(), kValue, state.kind(o));
    }
    kds.reserve(static_cast<std::size_t>(order > 0 ? n : 0));
    for (Index o = 0; o < n && order > 0; ++o) {
        kds.emplace_back(x, state.location(o), state.params());
        const KernelDerivatives& kd = kds.back();
        const int t = state.kind(o);
        m.kvec[o] = cross_cov(kd, kValue, t);
        if (order >= 1) {
            for (Index i = 0; i < d; ++i) m.kgrad(o, i) = cross_cov_da(kd, kValue, t, static_cast<int>(i));
        }
    }
    m.dvec = state.solve(m.kvec);
    m.mean = m.kvec.dot(c);
    const double var = amp - m.kvec.dot(m.dvec);
    m.var = var < kVarianceFloor * amp ? 0.0 : var;
    m.sd = std::sqrt(m.var);
    if (order == 0) return m;

    if (m.sd == 0.0) {
        throw DegenerateVariance("gp: posterior variance vanishes at the query point");
    }
    m.grad_mean = m.kgrad.transpose() * c;
    m.grad_sd = -(m.kgrad.transpose() * m.dvec) / m.sd;
    m.wmat = state.solve(m.kgrad);
    if (order == 1) return m;

    for (Index o = 0; o < n; ++o) {
        const KernelDerivatives& kd = kds[static_cast<std::size_t>(o)];
        const int t = state.kind(o);
        for (Index i = 0; i < d; ++i) {
            for (Index j = 0; j <= i; ++j) {
                const double h = cross_cov_dada(kd, kValue, t, static_cast<int>(i), static_cast<int>(j));
                hmean(i, j) += c[o] * h;
                hd(i, j) += m.dvec[o] * h;
            }
        }
    }
    hmean = hmean.selfadjointView<Eigen::Lower>();
    hd = hd.selfadjointView<Eigen::Lower>();
    const Vector& gs = *m.grad_sd;
    Matrix kw = m.kgrad.transpose() * m.wmat;
    Matrix hsd = -(hd + 0.5 * (kw + kw.transpose()) + gs * gs.transpose()) / m.sd;
    m.hess_mean = std::move(hmean);
    m.hess_sd = std::move(hsd);
    return m;
}

JointPosterior joint_posterior(const GPState& state, const Vector& x) {
    if (x.size() != state.dim()) throw ContractViolation("gp: query dimension mismatch");
    const Index n = state.size();
    const Index d = state.dim();
    const Index q = d + 1;
    JointPosterior jp;
    jp.cross.resize(n, q);
    for (Index o = 0; o < n; ++o) {
        for (Index a = 0; a < q; ++a) {
            jp.cross(o, a) = cross_cov(state.location(o), x, state.params(), state.kind(o), static_cast<int>(a) - 1);
        }
    }
    Matrix prior(q, q);
    for (Index a = 0; a < q; ++a) {
        for (Index b = 0; b < q; ++b) {
            prior(a, b) = cross_cov(x, x, state.params(), static_cast<int>(a) - 1, static_cast<int>(b) - 1);
        }
    }
    jp.solved = state.solve(jp.cross);
    jp.mean = jp.cross.transpose() * state.coeffs();
    Matrix reduction = jp.cross.transpose() * jp.solved;
    jp.cov = prior - 0.5 * (reduction + reduction.transpose());
    return jp;
}

MomentTangent posterior_data_tangent(const GPState& state, const PosteriorMoments& m,
                                     const Vector& x, const DataTangent& t) {
    check_tangent(state, t);
    if (m.order < 1) throw ContractViolation("gp: data tangent needs first-order moments");
    if (m.sd == 0.0) throw DegenerateVariance("gp: posterior variance vanishes at the query point");
    const Index n = state.size();
    const Index d = state.dim();

    Vector kdot = Vector::Zero(n);
    Matrix k1dot = Matrix::Zero(n, d);
    for (Index o = 0; o < n; ++o) {
        const auto xo_dot = t.locations.col(o);
        if (xo_dot.isZero(0.0)) continue;
        const KernelDerivatives kd(x, state.location(o), state.params());
        const int ko = state.kind(o);
        for (Index l = 0; l < d; ++l) {
            if (xo_dot[l] == 0.0) continue;
            // Moving the observation is the negative of moving the query.
            kdot[o] -= cross_cov_da(kd, kValue, ko, static_cast<int>(l)) * xo_dot[l];
            for (Index i = 0; i < d; ++i) {
                k1dot(o, i) -= cross_cov_dada(kd, kValue, ko, static_cast<int>(i), static_cast<int>(l)) * xo_dot[l];
            }
        }
    }
    const Matrix kmat_dot = covariance_tangent(state, t.locations);
    const Vector c = state.coeffs();
    const Vector resid = t.values - kmat_dot * c;
    const Vector kd_d = kmat_dot * m.dvec;

    MomentTangent out;
    out.mean = kdot.dot(c) + m.dvec.dot(resid);
    out.sd = (-2.0 * kdot.dot(m.dvec) + m.dvec.dot(kd_d)) / (2.0 * m.sd);
    out.grad_mean = k1dot.transpose() * c + m.wmat.transpose() * resid;
    out.grad_sd = -(out.sd * (*m.grad_sd) + k1dot.transpose() * m.dvec + m.wmat.transpose() * kdot -
                    m.wmat.transpose() * kd_d) /
                  m.sd;
    return out;
}

ObservationDerivatives posterior_data_derivatives(const GPState& state, const Vector& x, Index j) {
    if (j < state.num_fixed() || j >= state.size()) {
        throw ContractViolation("gp: observation " + std::to_string(j) +
                                " is not a fantasy observation");
    }
    const Index n = state.size();
    const Index d = state.dim();
    const PosteriorMoments m = posterior(state, x, 1);

    DataTangent t{Vector::Zero(n), Matrix::Zero(d, n)};
    ObservationDerivatives out;
    t.values[j] = 1.0;
    out.value = posterior_data_tangent(state, m, x, t);
    t.values[j] = 0.0;
    for (Index l = 0; l < d; ++l) {
        t.locations(l, j) = 1.0;
        out.location.push_back(posterior_data_tangent(state, m, x, t));
        t.locations(l, j) = 0.0;
    }
    return out;
}

JointTangent joint_posterior_tangent(const GPState& state, const JointPosterior& jp,
                                     const Vector& x, const Vector& x_dot,
                                     const DataTangent& t) {
    check_tangent(state, t);
    const Index n = state.size();
    const Index d = state.dim();
    const Index q = d + 1;

    Matrix cdot = Matrix::Zero(n, q);
    Vector rel(d);
    for (Index o = 0; o < n; ++o) {
        rel = t.locations.col(o) - x_dot;
        if (rel.isZero(0.0)) continue;
        const KernelDerivatives kd(state.location(o), x, state.params());
        const int ko = state.kind(o);
        for (Index a = 0; a < q; ++a) {
            double v = 0.0;
            for (Index l = 0; l < d; ++l) {
                if (rel[l] != 0.0) v += cross_cov_da(kd, ko, static_cast<int>(a) - 1, static_cast<int>(l)) * rel[l];
            }
            cdot(o, a) = v;
        }
    }
    const Matrix kmat_dot = covariance_tangent(state, t.locations);
    const Vector c = state.coeffs();

    JointTangent out;
    out.mean = cdot.transpose() * c + jp.solved.transpose() * (t.values - kmat_dot * c);
    Matrix ca = cdot.transpose() * jp.solved;
    out.cov = -(ca + ca.transpose()) + jp.solved.transpose() * kmat_dot * jp.solved;
    return out;
}

FantasyGP::FantasyGP(GPState base) : state_(std::move(base)) {}

FantasyGP FantasyGP::condition_with_gradient(const Vector& x, double value,
                                             const Vector& gradient) const {
    const Index d = state_.dim();
    if (x.size() != d || gradient.size() != d) {
        throw ContractViolation("gp: gradient observation dimension mismatch");
    }
    Matrix X(d, d + 1);
    X.colwise() = x;
    std::vector<int> kinds(static_cast<std::size_t>(d + 1));
    Vector y(d + 1);
    kinds[0] = kValue;
    y[0] = value;
    for (Index i = 0; i < d; ++i) {
        kinds[static_cast<std::size_t>(i + 1)] = static_cast<int>(i);
        y[i + 1] = gradient[i];
    }
    FantasyGP out;
    out.state_ = state_.condition_block(X, kinds, y, 0.0);
    out.points_ = points_;
    out.values_ = values_;
    out.gradients_ = gradients_;
    out.points_.push_back(x);
    out.values_.push_back(value);
    out.gradients_.push_back(gradient);
    return out;
}

FantasyGP condition_with_gradient(const GPState& state, const Vector& x, double value,
                                  const Vector& gradient) {
    return FantasyGP(state).condition_with_gradient(x, value, gradient);
}

JointDraw sample_joint(const GPState& state, const Vector& x, const Vector& z) {
    if (z.size() != state.dim() + 1) {
        throw ContractViolation("gp: joint draw needs 1 + d standard normals, got " +
                                std::to_string(z.size()));
    }
    JointDraw out;
    out.posterior = joint_posterior(state, x);
    out.factor = psd_cholesky(out.posterior.cov, state.params().amplitude, &out.degenerate);
    const Vector draw = out.posterior.mean + out.factor * z;
    out.value = draw[0];
    out.gradient = draw.tail(state.dim());
    return out;
}

JointDraw sample_joint(const FantasyGP& fgp, const Vector& x, const Vector& z) {
    return sample_joint(fgp.state(), x, z);
}

}  // namespace rbo
