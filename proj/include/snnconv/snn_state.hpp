#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace snnconv {

/// Per-layer simulation state of the converted network. Membrane potentials
/// are accumulated in extended precision so that a constant-input neuron's
/// spike count agrees bit-exactly with the closed-form clip/floor rate for
/// desk-scale horizons; everything exposed to analysis is double.
struct SnnLayerState {
    std::vector<long double> v_after;       // residual potential after firing
    std::vector<long double> v_before;      // potential before firing, this step
    std::vector<long double> v_before_prev; // previous step's v_before (DET)
    std::vector<double> v_mean;             // running mean of v_after over steps
    std::vector<double> threshold;          // per-neuron threshold in force
    std::vector<double> rate_sum;           // sum over steps of threshold * spike
    std::vector<long long> spike_counts;
    std::vector<std::uint8_t> fired_now;
    double base_threshold = 0.0;            // calibrated V_th of the layer
    std::vector<std::size_t> shape;

    std::size_t size() const { return threshold.size(); }

    void init(std::vector<std::size_t> layer_shape, double base);
    void reset();
};

}  // namespace snnconv
