#pragma once

#include <cstdint>

#include "rbo/rollout.hpp"

namespace rbo {

struct Proposal {
    Vector x;
    double value = 0.0;     ///< re-estimated at twice the sample count
    double value_se = 0.0;
    int restarts_used = 0;  ///< restarts that produced at least one estimate
};

/// Maximize the rollout acquisition by projected Adam from box-uniform starts. All
/// restarts share one sample stream when CRN is on; otherwise every evaluation draws a
/// fresh one. The restart winners are compared on a fresh stream of 2N samples.
Proposal propose_next(const GPState& gp, const RolloutConfig& cfg, const AdamConfig& adam, std::uint64_t seed);

}  // namespace rbo
