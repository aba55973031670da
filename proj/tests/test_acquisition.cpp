#include <doctest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "rbo/acquisition.hpp"
#include "rbo/errors.hpp"
#include "rbo/optimizer.hpp"

using namespace rbo;

namespace {

PosteriorMoments fixed_moments(double mean, double sd) {
    PosteriorMoments m;
    m.mean = mean;
    m.sd = sd;
    m.var = sd * sd;
    return m;
}

struct Scene {
    Matrix X;
    Vector y;
    KernelParams params;
    Index n_fixed;

    GPState build() const {
        GPState s = GPState::fit(X.leftCols(n_fixed), y.head(n_fixed), params, 1e-4);
        for (Index j = n_fixed; j < X.cols(); ++j) s = s.condition(X.col(j), y[j]);
        return s;
    }
};

Scene random_scene(std::mt19937_64& rng, Index d) {
    Scene s;
    s.X = oracle::uniform_mat(rng, d, 6);
    s.y = oracle::uniform(rng, 6, -1, 1);
    s.params.amplitude = oracle::uniform(rng, 1, 0.5, 2.0)[0];
    s.params.lengthscales = oracle::uniform(rng, d, 0.3, 1.0);
    s.n_fixed = 4;
    return s;
}

}  // namespace

TEST_CASE("EI closed form") {
    const double phi0 = 0.3989422804014327;
    CHECK(ei(fixed_moments(1.0, 0.5), 1.0, 0.0) == doctest::Approx(0.5 * phi0).epsilon(1e-12));
    CHECK(ei(fixed_moments(0.8, 0.5), 1.0, 0.2) == doctest::Approx(0.5 * phi0).epsilon(1e-12));
    CHECK(ei(fixed_moments(0.0, 0.0), 1.0, 0.0) == 1.0);
    CHECK(ei(fixed_moments(0.0, 1e-9), 1.0, 0.0) == doctest::Approx(1.0));
    CHECK(ei(fixed_moments(2.0, 0.0), 1.0, 0.0) == 0.0);

    const EIQuantities q = ei_quantities(fixed_moments(0.3, 0.7), 0.5, 0.05);
    CHECK(q.gp1 == doctest::Approx(oracle::normal_cdf(q.z)));
    CHECK(q.value == doctest::Approx(0.7 * q.g));

    // Monte Carlo oracle.
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n01;
    const double mu = 0.2, sd = 0.6, fb = 0.4;
    const int n = 1000000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = std::max(fb - (mu + sd * n01(rng)), 0.0);
        s += v;
        s2 += v * v;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(mean - ei(fixed_moments(mu, sd), fb, 0.0)) <= 4.0 * se);
}

TEST_CASE("EI profile derivatives and bounds") {
    for (double z = -6.0; z <= 6.0; z += 0.37) {
        const auto g = [](double t) { return t * normal_cdf(t) + normal_pdf(t); };
        CHECK(g(z) >= 0.0);
        CHECK(g(z) >= z);
        CHECK(std::abs(oracle::fd_scalar(g, z, 1e-5) - normal_cdf(z)) <= 1e-8);
        CHECK(std::abs(oracle::fd_scalar(normal_cdf, z, 1e-5) - normal_pdf(z)) <= 1e-8);
        CHECK(normal_cdf(z) >= 0.0);
        CHECK(normal_cdf(z) <= 1.0);
    }
}

TEST_CASE("EI is monotone in the mean") {
    double prev = -1.0;
    for (double mu = 2.0; mu >= -2.0; mu -= 0.1) {
        const double v = ei(fixed_moments(mu, 0.4), 0.0, 0.0);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("EI gradient and Hessian against finite differences") {
    std::mt19937_64 rng(32);
    for (Index d : {1, 2}) {
        for (int t = 0; t < 50; ++t) {
            const Scene sc = random_scene(rng, d);
            const GPState st = sc.build();
            const double fb = st.f_best() + 0.1 * oracle::uniform(rng, 1, -1, 1)[0];
            const double xi = t % 3 == 0 ? 0.05 : 0.0;
            const Vector x = oracle::uniform(rng, d);
            const PosteriorMoments m = posterior(st, x, 2);
            const auto f = [&](const Vector& z) { return ei(posterior(st, z, 0), fb, xi); };
            const auto g = [&](const Vector& z) -> Vector { return ei_grad(posterior(st, z, 1), fb, xi); };
            if (oracle::condition(st.covariance()) > 1e8) continue;
            CHECK(oracle::best_step([&](double s) { return oracle::rel_err(ei_grad(m, fb, xi), oracle::fd_grad(f, x, s)); }) <= 1e-5);
            const Matrix h = ei_hess(m, fb, xi);
            CHECK(oracle::best_step([&](double s) { return oracle::rel_err(h, oracle::fd_jac(g, x, s)); }) <= 1e-5);
            CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);

            const auto pf = [&](const Vector& z) { return poi(posterior(st, z, 0), fb, xi); };
            const auto pg = [&](const Vector& z) -> Vector { return poi_grad(posterior(st, z, 1), fb, xi); };
            CHECK(oracle::best_step([&](double s) { return oracle::rel_err(poi_grad(m, fb, xi), oracle::fd_grad(pf, x, s)); }) <= 1e-5);
            CHECK(oracle::best_step([&](double s) { return oracle::rel_err(poi_hess(m, fb, xi), oracle::fd_jac(pg, x, s)); }) <= 1e-5);

            const auto uf = [&](const Vector& z) { return ucb(posterior(st, z, 0), 4.0); };
            const auto ug = [&](const Vector& z) -> Vector { return ucb_grad(posterior(st, z, 1), 4.0); };
            CHECK(oracle::best_step([&](double s) { return oracle::rel_err(ucb_grad(m, 4.0), oracle::fd_grad(uf, x, s)); }) <= 1e-5);
            CHECK(oracle::best_step([&](double s) { return oracle::rel_err(ucb_hess(m, 4.0), oracle::fd_jac(ug, x, s)); }) <= 1e-5);
        }
    }
}

TEST_CASE("EI gradient vanishes at a symmetric midpoint") {
    Matrix X(1, 2);
    X << 0.2, 0.8;
    const GPState st = GPState::fit(X, Vector::Constant(2, 0.5), KernelParams::isotropic(1, 1.0, 0.3), 1e-6);
    const PosteriorMoments m = posterior(st, Vector::Constant(1, 0.5), 1);
    CHECK(std::abs(ei_grad(m, 0.5, 0.0)[0]) <= 1e-12);
}

TEST_CASE("EI derivatives reject degenerate variance") {
    PosteriorMoments m = fixed_moments(0.0, 0.0);
    m.order = 2;
    CHECK_THROWS_AS(ei_grad(m, 1.0, 0.0), DegenerateVariance);
    CHECK_THROWS_AS(poi(m, 1.0, 0.0), DegenerateVariance);
}

TEST_CASE("EI mixed data-derivatives against finite differences") {
    std::mt19937_64 rng(33);
    for (Index d : {1, 2}) {
        for (int t = 0; t < 50; ++t) {
            Scene sc = random_scene(rng, d);
            if (t % 2 == 0) sc.y[4] = sc.y.head(4).minCoeff() - 0.3;  // fantasy 4 is the incumbent
            const GPState st = sc.build();
            const Vector x = oracle::uniform(rng, d);
            const Index j = 4 + t % 2;
            const ObservationDerivatives od = posterior_data_derivatives(st, x, j);
            const PosteriorMoments m = posterior(st, x, 1);
            const double fb = st.f_best();
            Index arg = 0;
            sc.y.minCoeff(&arg);
            const double fb_dot = arg == j ? 1.0 : 0.0;
            const auto at = [&](const std::function<void(Scene&)>& edit) {
                Scene c = sc;
                edit(c);
                const GPState s2 = c.build();
                const PosteriorMoments m2 = posterior(s2, x, 1);
                Vector v(1 + d);
                v << ei(m2, s2.f_best(), 0.0), ei_grad(m2, s2.f_best(), 0.0);
                return v;
            };
            if (oracle::condition(st.covariance()) > 1e8) continue;
            const EIMixed mv = ei_mixed_data(m, od.value, fb, 0.0, fb_dot);
            Vector an(1 + d);
            an << mv.value, mv.grad;
            CHECK(oracle::best_step([&](double h) {
                      const Vector fd =
                          (at([&](Scene& c) { c.y[j] += h; }) - at([&](Scene& c) { c.y[j] -= h; })) / (2 * h);
                      return oracle::rel_err(an, fd);
                  }) <= 1e-5);
            for (Index l = 0; l < d; ++l) {
                const EIMixed ml = ei_mixed_data(m, od.location[static_cast<std::size_t>(l)], fb, 0.0, 0.0);
                Vector al(1 + d);
                al << ml.value, ml.grad;
                CHECK(oracle::best_step([&](double h) {
                          const Vector fdl =
                              (at([&](Scene& c) { c.X(l, j) += h; }) - at([&](Scene& c) { c.X(l, j) -= h; })) / (2 * h);
                          return oracle::rel_err(al, fdl);
                      }) <= 1e-5);
            }
        }
    }
}

TEST_CASE("EI mixed derivative of the incumbent alone") {
    std::mt19937_64 rng(34);
    const Scene sc = random_scene(rng, 2);
    const GPState st = sc.build();
    const Vector x = oracle::uniform(rng, 2);
    const PosteriorMoments m = posterior(st, x, 1);
    MomentTangent none{0.0, 0.0, Vector::Zero(2), Vector::Zero(2)};
    const EIMixed mix = ei_mixed_data(m, none, 0.1, 0.0, 1.0);
    const double h = 1e-6;
    CHECK(oracle::rel_err(mix.value, (ei(m, 0.1 + h) - ei(m, 0.1 - h)) / (2 * h)) <= 1e-5);
    CHECK(oracle::rel_err(mix.grad, (ei_grad(m, 0.1 + h) - ei_grad(m, 0.1 - h)) / (2 * h)) <= 1e-5);

    // A perturbation with no correlation to x changes nothing.
    const EIMixed zero = ei_mixed_data(m, none, 0.1, 0.0, 0.0);
    CHECK(std::abs(zero.value) <= 1e-12);
    CHECK(zero.grad.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("probability of improvement and UCB") {
    CHECK(poi(fixed_moments(0.5, 0.3), 0.5, 0.0) == doctest::Approx(0.5));
    double prev = 0.0;
    for (double fb = -1.0; fb <= 1.0; fb += 0.1) {
        const double v = poi(fixed_moments(0.0, 0.3), fb, 0.0);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(ucb(fixed_moments(0.3, 0.5), 4.0) == doctest::Approx(-0.3 + 1.0));

    // beta = 0: the UCB argmax is the posterior-mean argmin.
    Matrix X(1, 3);
    X << 0.1, 0.5, 0.9;
    const GPState st = GPState::fit(X, Vector(Eigen::Vector3d(1.0, -0.5, 0.7)), KernelParams::isotropic(1, 1.0, 0.2), 1e-6);
    double best_mean = 1e9, best_x = 0.0, best_ucb = -1e9, best_ux = 0.0;
    for (int i = 0; i <= 2000; ++i) {
        const Vector x = Vector::Constant(1, i / 2000.0);
        const PosteriorMoments m = posterior(st, x, 0);
        if (m.mean < best_mean) best_mean = m.mean, best_x = x[0];
        if (ucb(m, 0.0) > best_ucb) best_ucb = ucb(m, 0.0), best_ux = x[0];
    }
    CHECK(best_x == best_ux);
}

TEST_CASE("EI Hessian is negative semidefinite at interior maxima") {
    std::mt19937_64 rng(35);
    for (int t = 0; t < 10; ++t) {
        const Scene sc = random_scene(rng, 2);
        const GPState st = sc.build();
        const double fb = st.f_best();
        InnerOptConfig cfg;
        cfg.box = Box::unit(2);
        Rng r(static_cast<std::uint64_t>(t));
        const InnerResult res = inner_maximize(
            [&](const Vector& x, int order) {
                const PosteriorMoments m = posterior(st, x, order);
                return Evaluation{ei(m, fb), order >= 1 ? ei_grad(m, fb) : Vector(), order >= 2 ? ei_hess(m, fb) : Matrix()};
            },
            cfg, r);
        if (!res.stationary || std::count(res.pinned.begin(), res.pinned.end(), true) > 0) continue;
        CHECK(res.grad.cwiseAbs().maxCoeff() <= 1e-3);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(res.hess);
        CHECK(eig.eigenvalues().maxCoeff() <= 1e-10);
    }
}
