#include "rbo/propose.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rbo/errors.hpp"

namespace rbo {

namespace {

constexpr std::uint64_t kStartsTag = 0x5354415254ULL;
constexpr std::uint64_t kFinalTag = 0x46494e414cULL;

}  // namespace

Proposal propose_next(const GPState& gp, const RolloutConfig& cfg, const AdamConfig& adam, std::uint64_t seed) {
    cfg.validate();
    adam.validate();
    const Index d = gp.dim();
    if (cfg.domain.dim() != d) throw ContractViolation("propose_next: domain dimension mismatch");

    const SampleStream shared = make_stream(cfg, d, seed);
    std::uint64_t fresh_counter = 0;
    std::vector<Vector> winners;
    std::string last_failure;
    Rng starts(mix_seed(seed, kStartsTag));
    for (int r = 0; r < adam.restarts; ++r) {
        const Vector x0 = cfg.domain.uniform(starts);
        const StochasticObjective objective = [&](const Vector& x) {
            RolloutEstimate est;
            try {
                if (cfg.variance_reduction.crn) {
                    est = rollout_value_and_grad(gp, x, cfg, shared);
                } else {
                    est = rollout_value_and_grad(gp, x, cfg, make_stream(cfg, d, mix_seed(seed, ++fresh_counter)));
                }
            } catch (const EstimatorDegraded& e) {
                last_failure = e.what();
                throw;
            }
            return StochasticEvaluation{est.value, est.grad, est.value_se};
        };
        const AdamResult res = adam_maximize(objective, x0, adam, cfg.domain);
        if (std::isfinite(res.value)) winners.push_back(res.x);
    }
    if (winners.empty()) {
        throw EstimatorDegraded("propose_next: no restart produced a usable estimate (" + last_failure + ")", 0,
                                static_cast<std::size_t>(cfg.n_samples));
    }

    RolloutConfig final_cfg = cfg;
    final_cfg.n_samples = 2 * cfg.n_samples;
    const SampleStream final_stream = make_stream(final_cfg, d, mix_seed(seed, kFinalTag));
    Proposal out;
    out.value = -std::numeric_limits<double>::infinity();
    out.restarts_used = static_cast<int>(winners.size());
    for (const Vector& x : winners) {
        const RolloutEstimate est = rollout_value_and_grad(gp, x, final_cfg, final_stream, false);
        if (est.value > out.value) {
            out.value = est.value;
            out.value_se = est.value_se;
            out.x = x;
        }
    }
    return out;
}

}  // namespace rbo
