// Benchmark CLI: single-function runs, manifest-driven suites and plot-script emission.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rbo/bench.hpp"
#include "rbo/errors.hpp"

namespace {

bool on_off(const std::string& v) { return v == "on"; }

int report_failures(const std::vector<rbo::BenchRun>& runs) {
    int failed = 0;
    for (const rbo::BenchRun& r : runs) {
        if (r.ok) continue;
        ++failed;
        std::cerr << "bench: run " << r.function << "/" << r.policy << "/seed " << r.seed << " aborted: " << r.error
                  << "\n";
    }
    return failed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rollout Bayesian optimization benchmarks"};
    app.require_subcommand(1);
    const std::vector<std::string> switch_values = {"on", "off"};

    auto* run = app.add_subcommand("run", "Run BO trials of one policy on one test function");
    std::string function;
    std::string policy = "ei";
    int horizon = 1;
    long samples = 64;
    int budget = 15;
    int trials = 1;
    std::uint64_t seed = 0;
    int n_init = 1;
    std::string qmc = "on", crn = "on", cv = "on", timing = "off";
    std::string gradient = "pathwise";
    std::string out = "-";
    std::string summary_out;
    rbo::BenchConfig cfg;
    run->add_option("--function", function, "Test function id")
        ->required()
        ->check(CLI::IsMember({"gramacy_lee", "rosenbrock", "branin", "goldstein_price", "six_hump_camel", "schwefel4d"}));
    run->add_option("--policy", policy, "Acquisition policy")->check(CLI::IsMember({"pi", "ei", "ucb", "rollout"}));
    run->add_option("--horizon", horizon, "Rollout horizon h")->check(CLI::Range(0, 99));
    run->add_option("--samples", samples, "Monte Carlo samples N per rollout estimate")->check(CLI::PositiveNumber);
    run->add_option("--budget", budget, "BO iterations per trial")->check(CLI::PositiveNumber);
    run->add_option("--trials", trials, "Number of trials (seeds seed .. seed+trials-1)")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "First trial seed");
    run->add_option("--n-init", n_init, "Initial random observations")->check(CLI::PositiveNumber);
    run->add_option("--qmc", qmc, "Sobol (on) or pseudorandom (off) samples")->check(CLI::IsMember(switch_values));
    run->add_option("--crn", crn, "Common random numbers across Adam iterations")->check(CLI::IsMember(switch_values));
    run->add_option("--cv", cv, "EI control variate on the rollout value")->check(CLI::IsMember(switch_values));
    run->add_option("--gradient", gradient, "Rollout gradient estimator")
        ->check(CLI::IsMember({"pathwise", "sample_path"}));
    run->add_option("--ucb-beta", cfg.ucb_beta, "UCB exploration coefficient")->check(CLI::NonNegativeNumber);
    run->add_option("--adam-restarts", cfg.adam.restarts, "Adam restarts per proposal")->check(CLI::PositiveNumber);
    run->add_option("--adam-iters", cfg.adam.max_iters, "Adam iterations per restart")->check(CLI::PositiveNumber);
    run->add_option("--inner-restarts", cfg.inner.restarts, "Restarts of the inner EI maximization")
        ->check(CLI::PositiveNumber);
    run->add_option("--timing", timing, "Write wall-clock times instead of NA")->check(CLI::IsMember(switch_values));
    run->add_option("--out", out, "Results CSV path ('-' for stdout)");
    run->add_option("--summary", summary_out, "Optional summary CSV path");

    auto* suite = app.add_subcommand("suite", "Run every block of a manifest");
    std::string manifest_path;
    std::string suite_out;
    suite->add_option("--manifest", manifest_path, "Manifest file")->required();
    suite->add_option("--out", suite_out, "Output directory")->required();

    auto* plots = app.add_subcommand("plots", "Emit matplotlib scripts for a results CSV");
    std::string plots_in;
    std::string plots_out;
    plots->add_option("--in", plots_in, "Results CSV")->required();
    plots->add_option("--out", plots_out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            cfg.n_samples = samples;
            cfg.variance_reduction = {on_off(qmc), on_off(crn), on_off(cv)};
            cfg.gradient = gradient == "pathwise" ? rbo::GradientEstimator::pathwise
                                                  : rbo::GradientEstimator::sample_path;
            cfg.timing = on_off(timing);
            const rbo::Policy p = policy == "rollout" ? rbo::Policy{rbo::PolicyKind::rollout, horizon}
                                                      : rbo::Policy::parse(policy);
            const rbo::TestFunction& fn = rbo::find_function(function);
            std::vector<rbo::BenchRun> runs;
            for (int t = 0; t < trials; ++t) {
                runs.push_back(rbo::run_bo(fn, p, seed + static_cast<std::uint64_t>(t), budget, n_init, cfg));
            }
            if (out == "-") {
                rbo::write_results_csv(std::cout, runs, cfg.timing);
            } else {
                std::ofstream os(out);
                if (!os) throw std::runtime_error("cannot write '" + out + "'");
                rbo::write_results_csv(os, runs, cfg.timing);
            }
            if (!summary_out.empty()) {
                std::ofstream os(summary_out);
                if (!os) throw std::runtime_error("cannot write '" + summary_out + "'");
                rbo::write_summary_csv(os, rbo::summarize(runs));
            }
            return report_failures(runs) > 0 ? 1 : 0;
        }
        if (*suite) {
            const rbo::Manifest manifest = rbo::load_manifest(manifest_path);
            std::filesystem::create_directories(suite_out);
            const std::vector<rbo::BenchRun> runs = rbo::run_suite(manifest);
            std::ofstream results(std::filesystem::path(suite_out) / "results.csv");
            rbo::write_results_csv(results, runs, manifest.config.timing);
            std::ofstream summary(std::filesystem::path(suite_out) / "summary.csv");
            rbo::write_summary_csv(summary, rbo::summarize(runs));
            report_failures(runs);
            return 0;
        }
        if (*plots) {
            for (const std::string& path : rbo::emit_plots(plots_in, plots_out)) std::cout << path << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "bench: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
