#pragma once

#include <vector>

#include "snnconv/snn.hpp"

namespace snnconv {

/// Per-layer statistics of Spikes of Inactivated Neurons over a calibration
/// set. A neuron is in the SIN set of a sample iff its ANN pre-ReLU
/// activation is negative and it fired at least once during the run.
struct SinStats {
    std::vector<double> sin_neuron_ratio;               // per layer, mean |R|/M over samples
    std::vector<std::vector<long long>> sin_spike_counts;  // per layer, per neuron, summed over samples
    std::vector<std::vector<long long>> sin_step_histogram;  // per layer, per step, SIN spikes summed
    std::size_t num_samples = 0;
    int T = 0;
};

/// Simulates every calibration sample for T steps with the confidence filter
/// disabled and aggregates the SIN statistics. The profile must carry stored
/// pre-ReLU activations for the same samples in the same order.
SinStats measure_sin(const SnnNetwork& net, const ActivationProfile& profile,
                     const LabeledDataset& calib_set, int T);

/// p[l] = 1 - sin_neuron_ratio[l] on the selected layers, 1 elsewhere.
/// An empty selection means the last IF layer only.
SpikeConfidenceTable derive_confidence(const SinStats& stats, const std::vector<int>& layers,
                                       int early_steps);

/// Averaged number of SIN spikes per neuron in one layer
/// (all neurons in the denominator).
double ans(const SinStats& stats, std::size_t layer);

}  // namespace snnconv
