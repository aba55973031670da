#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rbo/acquisition.hpp"
#include "rbo/functions.hpp"
#include "rbo/propose.hpp"

namespace rbo {

enum class PolicyKind { pi, ei, ucb, rollout };

struct Policy {
    PolicyKind kind = PolicyKind::ei;
    int horizon = 0;  ///< rollout only

    /// pi, ei, ucb, rollout_h<h>
    std::string id() const;
    /// Accepts the ids produced by id().
    static Policy parse(const std::string& id);
};

struct BenchConfig {
    Index n_samples = 64;
    VarianceReduction variance_reduction;
    GradientEstimator gradient = GradientEstimator::pathwise;
    double noise = 1e-6;
    double xi = 0.0;
    double ucb_beta = kDefaultUcbBeta;
    int analytic_restarts = 16;  ///< multistart count for PI / EI / UCB maximization
    InnerOptConfig inner;        ///< base-policy maximization inside rollouts
    AdamConfig adam;
    int hyper_restarts = 2;
    bool refit_hypers = true;           ///< off: keep amplitude 1 and default_lengthscale throughout
    double default_lengthscale = 0.25;  ///< used (in unit-cube coordinates) before two points exist
    bool timing = false;                ///< record wall-clock per iteration
};

struct BenchRun {
    std::string function;
    std::string policy;
    std::uint64_t seed = 0;
    int budget = 0;
    int n_init = 0;
    double f_opt = 0.0;
    std::vector<double> history;  ///< incumbent after the initial design, then after each evaluation
    std::vector<double> wall_ms;  ///< per BO iteration (entry 0: initial design)
    double gap = 0.0;
    bool ok = true;
    std::string error;
};

/// (f_first - f_last) / (f_first - f_opt), clamped to [0, 1]; 1 when f_first <= f_opt.
double gap(const std::vector<double>& history, double f_opt);

/// One BO run. Inputs are mapped to the unit cube and observations standardized before
/// every hyperparameter fit. Non-finite objective values abort the run (ok = false).
BenchRun run_bo(const TestFunction& fn, const Policy& policy, std::uint64_t seed, int budget, int n_init,
                const BenchConfig& cfg);

/// Next point (unit-cube coordinates) chosen by a policy on a fitted GP.
Vector propose_with_policy(const GPState& gp, const Policy& policy, const BenchConfig& cfg, std::uint64_t seed);

inline constexpr const char* kResultsHeader = "# rollout-bench results v1";
inline constexpr const char* kSummaryHeader = "# rollout-bench summary v1";

void write_results_csv(std::ostream& os, const std::vector<BenchRun>& runs, bool timing);

struct SummaryRow {
    std::string function;
    std::string policy;
    int trials = 0;
    int failed = 0;
    double mean_gap = 0.0;
    double median_gap = 0.0;
};

/// Mean and median GAP per (function, policy) in order of first appearance.
std::vector<SummaryRow> summarize(const std::vector<BenchRun>& runs);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

/// One block of a suite: a function, the policies to compare and the trial seeds.
struct SuiteEntry {
    std::string function;
    std::vector<Policy> policies;
    std::uint64_t seed = 0;
    int trials = 1;
    int budget = 15;
    int n_init = 1;
};

struct Manifest {
    BenchConfig config;
    std::vector<SuiteEntry> entries;
};

/// Parses the INI-style manifest described in docs/manifest.md. Throws SchemaError.
Manifest parse_manifest(std::istream& is);
Manifest load_manifest(const std::string& path);

/// Runs every (function, policy, seed) combination; failures are recorded, not thrown.
std::vector<BenchRun> run_suite(const Manifest& manifest);

/// Writes gap_vs_iteration.py and cost_vs_horizon.py into out_dir; returns their paths.
/// Throws SchemaError when the CSV lacks required columns.
std::vector<std::string> emit_plots(const std::string& csv_path, const std::string& out_dir);

}  // namespace rbo
