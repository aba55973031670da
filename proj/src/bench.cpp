#include "rbo/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "rbo/acquisition.hpp"
#include "rbo/errors.hpp"

namespace rbo {

namespace {

constexpr std::uint64_t kDesignTag = 0x44455349474eULL;
constexpr std::uint64_t kHyperTag = 0x4859504552ULL;
constexpr std::uint64_t kProposeTag = 0x50524f50ULL;

std::string num(double v) { return fmt::format("{:.17g}", v); }

SmoothObjective analytic_objective(const GPState& gp, const Policy& policy, const BenchConfig& cfg) {
    const double f_best = gp.f_best();
    switch (policy.kind) {
        case PolicyKind::pi:
            return [&gp, f_best, &cfg](const Vector& x, int order) {
                const PosteriorMoments m = posterior(gp, x, order);
                return Evaluation{poi(m, f_best, cfg.xi), order >= 1 ? poi_grad(m, f_best, cfg.xi) : Vector(),
                                  order >= 2 ? poi_hess(m, f_best, cfg.xi) : Matrix()};
            };
        case PolicyKind::ucb:
            return [&gp, &cfg](const Vector& x, int order) {
                const PosteriorMoments m = posterior(gp, x, order);
                return Evaluation{ucb(m, cfg.ucb_beta), order >= 1 ? ucb_grad(m, cfg.ucb_beta) : Vector(),
                                  order >= 2 ? ucb_hess(m, cfg.ucb_beta) : Matrix()};
            };
        default:
            return [&gp, f_best, &cfg](const Vector& x, int order) {
                const PosteriorMoments m = posterior(gp, x, order);
                return Evaluation{ei(m, f_best, cfg.xi), order >= 1 ? ei_grad(m, f_best, cfg.xi) : Vector(),
                                  order >= 2 ? ei_hess(m, f_best, cfg.xi) : Matrix()};
            };
    }
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

std::string Policy::id() const {
    switch (kind) {
        case PolicyKind::pi: return "pi";
        case PolicyKind::ei: return "ei";
        case PolicyKind::ucb: return "ucb";
        case PolicyKind::rollout: return "rollout_h" + std::to_string(horizon);
    }
    return "unknown";
}

Policy Policy::parse(const std::string& id) {
    if (id == "pi") return {PolicyKind::pi, 0};
    if (id == "ei") return {PolicyKind::ei, 0};
    if (id == "ucb") return {PolicyKind::ucb, 0};
    const std::string prefix = "rollout_h";
    if (id.rfind(prefix, 0) == 0 && id.size() > prefix.size()) {
        const std::string digits = id.substr(prefix.size());
        if (std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
            digits.size() <= 2) {
            return {PolicyKind::rollout, std::stoi(digits)};
        }
    }
    throw ContractViolation("unknown policy '" + id + "' (expected pi, ei, ucb or rollout_h<h>)");
}

double gap(const std::vector<double>& history, double f_opt) {
    if (history.empty()) throw ContractViolation("gap: empty history");
    const double first = history.front();
    const double denom = first - f_opt;
    if (!(denom > 0.0)) return 1.0;
    return std::clamp((first - history.back()) / denom, 0.0, 1.0);
}

Vector propose_with_policy(const GPState& gp, const Policy& policy, const BenchConfig& cfg, std::uint64_t seed) {
    const Index d = gp.dim();
    if (policy.kind == PolicyKind::rollout) {
        RolloutConfig rc;
        rc.horizon = policy.horizon;
        rc.n_samples = cfg.n_samples;
        rc.variance_reduction = cfg.variance_reduction;
        rc.inner = cfg.inner;
        rc.domain = Box::unit(d);
        rc.gradient = cfg.gradient;
        rc.xi = cfg.xi;
        return propose_next(gp, rc, cfg.adam, seed).x;
    }
    InnerOptConfig ic = cfg.inner;
    ic.restarts = cfg.analytic_restarts;
    ic.box = Box::unit(d);
    Rng rng(seed);
    return inner_maximize(analytic_objective(gp, policy, cfg), ic, rng).x;
}

BenchRun run_bo(const TestFunction& fn, const Policy& policy, std::uint64_t seed, int budget, int n_init,
                const BenchConfig& cfg) {
    if (budget < 1) throw ContractViolation("run_bo: budget must be at least 1");
    if (n_init < 1) throw ContractViolation("run_bo: n_init must be at least 1");
    const Index d = fn.dim;
    const Vector lo = fn.box.lower;
    const Vector width = fn.box.upper - fn.box.lower;
    const auto to_domain = [&](const Vector& u) -> Vector { return lo + u.cwiseProduct(width); };

    BenchRun run;
    run.function = fn.name;
    run.f_opt = fn.f_opt;
    run.policy = policy.id();
    run.seed = seed;
    run.budget = budget;
    run.n_init = n_init;

    auto start = std::chrono::steady_clock::now();
    Matrix X(d, n_init + budget);
    Vector y(n_init + budget);
    Rng design(mix_seed(seed, kDesignTag));
    const Box unit = Box::unit(d);
    Index m = 0;
    for (; m < n_init; ++m) {
        X.col(m) = unit.uniform(design);
        y[m] = fn.eval(to_domain(X.col(m)));
        if (!std::isfinite(y[m])) {
            run.ok = false;
            run.error = "objective returned a non-finite value in the initial design";
            return run;
        }
    }
    run.history.push_back(y.head(m).minCoeff());
    run.wall_ms.push_back(elapsed_ms(start));

    KernelParams params = KernelParams::isotropic(d, 1.0, cfg.default_lengthscale);
    bool fitted = false;
    const Index capacity = m + budget + (policy.kind == PolicyKind::rollout ? (policy.horizon + 1) * (d + 1) : 0);
    try {
        for (int it = 1; it <= budget; ++it) {
            start = std::chrono::steady_clock::now();
            const Matrix xm = X.leftCols(m);
            const Vector ym = y.head(m);
            const double mean = ym.mean();
            const double sd = std::sqrt((ym.array() - mean).square().mean());
            const Vector ys = ((ym.array() - mean) / (sd > 0.0 ? sd : 1.0)).matrix();
            if (m >= 2 && cfg.refit_hypers) {
                HyperFitOptions opts;
                opts.restarts = cfg.hyper_restarts;
                opts.seed = mix_seed(seed, kHyperTag + static_cast<std::uint64_t>(it));
                if (fitted) opts.warm_start = params;
                try {
                    params = fit_hypers(xm, ys, cfg.noise, opts);
                    fitted = true;
                } catch (const NonPositiveDefinite&) {
                    // keep the previous hyperparameters
                }
            }
            const GPState gp = GPState::fit(xm, ys, params, cfg.noise, capacity);
            const Vector x = unit.project(
                propose_with_policy(gp, policy, cfg, mix_seed(seed, kProposeTag + static_cast<std::uint64_t>(it))));
            const double v = fn.eval(to_domain(x));
            if (!std::isfinite(v)) {
                run.ok = false;
                run.error = fmt::format("objective returned a non-finite value at iteration {}", it);
                break;
            }
            X.col(m) = x;
            y[m] = v;
            ++m;
            run.history.push_back(std::min(run.history.back(), v));
            run.wall_ms.push_back(elapsed_ms(start));
        }
    } catch (const std::exception& e) {
        run.ok = false;
        run.error = e.what();
    }
    run.gap = gap(run.history, fn.f_opt);
    return run;
}

void write_results_csv(std::ostream& os, const std::vector<BenchRun>& runs, bool timing) {
    os << kResultsHeader << '\n';
    os << "function,policy,seed,iteration,incumbent,gap,wall_ms\n";
    for (const BenchRun& run : runs) {
        std::vector<double> prefix;
        for (std::size_t t = 0; t < run.history.size(); ++t) {
            prefix.push_back(run.history[t]);
            os << run.function << ',' << run.policy << ',' << run.seed << ',' << t << ',' << num(run.history[t])
               << ',' << num(gap(prefix, run.f_opt)) << ',' << (timing ? num(run.wall_ms[t]) : std::string("NA"))
               << '\n';
        }
    }
}

std::vector<SummaryRow> summarize(const std::vector<BenchRun>& runs) {
    std::vector<SummaryRow> rows;
    std::vector<std::vector<double>> gaps;
    for (const BenchRun& run : runs) {
        auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryRow& r) {
            return r.function == run.function && r.policy == run.policy;
        });
        if (it == rows.end()) {
            rows.push_back({run.function, run.policy, 0, 0, 0.0, 0.0});
            gaps.emplace_back();
            it = rows.end() - 1;
        }
        const auto idx = static_cast<std::size_t>(it - rows.begin());
        ++it->trials;
        if (!run.ok) {
            ++it->failed;
            continue;
        }
        gaps[idx].push_back(run.gap);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<double>& g = gaps[i];
        if (g.empty()) {
            rows[i].mean_gap = rows[i].median_gap = std::nan("");
            continue;
        }
        double s = 0.0;
        for (double v : g) s += v;
        rows[i].mean_gap = s / static_cast<double>(g.size());
        std::sort(g.begin(), g.end());
        const std::size_t k = g.size() / 2;
        rows[i].median_gap = g.size() % 2 == 1 ? g[k] : 0.5 * (g[k - 1] + g[k]);
    }
    return rows;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
    os << kSummaryHeader << '\n';
    os << "function,policy,trials,failed,mean_gap,median_gap\n";
    for (const SummaryRow& r : rows) {
        os << r.function << ',' << r.policy << ',' << r.trials << ',' << r.failed << ',' << num(r.mean_gap) << ','
           << num(r.median_gap) << '\n';
    }
}

std::vector<BenchRun> run_suite(const Manifest& manifest) {
    std::vector<BenchRun> runs;
    for (const SuiteEntry& e : manifest.entries) {
        const TestFunction& fn = find_function(e.function);
        for (const Policy& p : e.policies) {
            for (int t = 0; t < e.trials; ++t) {
                const std::uint64_t seed = e.seed + static_cast<std::uint64_t>(t);
                try {
                    runs.push_back(run_bo(fn, p, seed, e.budget, e.n_init, manifest.config));
                } catch (const std::exception& ex) {
                    BenchRun failed;
                    failed.function = fn.name;
                    failed.f_opt = fn.f_opt;
                    failed.policy = p.id();
                    failed.seed = seed;
                    failed.ok = false;
                    failed.error = ex.what();
                    runs.push_back(std::move(failed));
                }
            }
        }
    }
    return runs;
}

}  // namespace rbo
