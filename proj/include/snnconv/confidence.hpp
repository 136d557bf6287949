#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace snnconv {

/// Per-layer Bernoulli gate on early-step spikes. p[l] = 1 means the filter
/// is a no-op for that layer and consumes no randomness.
struct SpikeConfidenceTable {
    std::vector<double> p;  // per IF layer, in [0,1]
    int early_steps = 16;

    bool trivial() const {
        for (double v : p)
            if (v < 1.0) return false;
        return true;
    }
};

/// One Bernoulli draw deciding whether a would-be spike passes the filter.
/// No randomness is consumed when theta is false or p == 1.
bool apply_confidence(bool theta, double p, std::mt19937_64& rng);

}  // namespace snnconv
