#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "snnconv/confidence.hpp"
#include "snnconv/model.hpp"
#include "snnconv/msat.hpp"
#include "snnconv/snn_state.hpp"

namespace snnconv {

/// Full spike record of a run; [layer][step][neuron]. Only filled on request.
struct SpikeRaster {
    std::vector<std::vector<std::vector<std::uint8_t>>> fired;
};

struct RunResult {
    std::vector<std::vector<double>> rates;             // threshold-weighted, per layer
    std::vector<std::vector<std::uint8_t>> output_spikes;  // per step, last layer
    std::vector<double> output_scores;                  // class scores (rates or potential)
    SpikeRaster raster;                                 // present iff requested
};

/// Time-stepped integrate-and-fire network sharing the ANN's weights.
/// One instance is single-threaded mutable state; distinct instances may
/// share the model and run concurrently.
struct SnnNetwork {
    std::shared_ptr<const AnnModel> model;
    std::vector<Block> blocks;
    std::vector<SnnLayerState> layers;
    MsatConfig config;
    SpikeConfidenceTable confidence;
    bool confidence_enabled = false;
    bool potential_readout = false;  // output scores from potential instead of rates
    int T = 0;
    int t = 0;  // steps completed
    std::uint64_t rng_seed = 0;
    std::mt19937_64 rng;

    void reset();
    void reseed(std::uint64_t seed);
};

/// Builds the SNN: weights shared, base thresholds from the profile maxima,
/// all potentials zero. Rejects layers whose calibrated maximum is not
/// positive (dead layer).
SnnNetwork convert(const AnnModel& model, const ActivationProfile& profile, Regime regime,
                   const MsatConfig& config);
SnnNetwork convert(std::shared_ptr<const AnnModel> model, const ActivationProfile& profile,
                   Regime regime, const MsatConfig& config);

/// Advances one time step. The first layer receives the analog input every
/// step; deeper layers receive threshold-weighted spikes. Returns the output
/// layer's spike flags for this step.
const std::vector<std::uint8_t>& step(SnnNetwork& net, const Tensor& input);

struct RunOptions {
    bool record_raster = false;
};

/// Resets the network and simulates T steps.
RunResult run(SnnNetwork& net, const Tensor& input, int T, const RunOptions& opts = {});

/// Closed-form rate of a constant-input IF neuron under constant threshold:
/// clip((v_th/T) * floor(a*T/v_th), 0, v_th). The floor is evaluated in
/// extended precision and the rate in the simulator's accumulate-then-divide
/// order so the equivalence with `run` is bit-exact on exact-step grids.
double clipfloor_oracle(double a, int T, double v_th);

}  // namespace snnconv
