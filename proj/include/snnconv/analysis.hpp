#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snnconv/calibrate.hpp"
#include "snnconv/snn.hpp"

namespace snnconv {

/// Layer-local conversion error split. Computed under the layer-wise
/// assumption that the previous layer's rate equals its ANN activation, so
/// each layer is fed its exact ANN input as a constant analog current.
struct ErrorReport {
    // per layer, per neuron
    std::vector<std::vector<double>> e_total;  // r - a
    std::vector<std::vector<double>> e_qc;     // clipfloor(pre) - a
    std::vector<std::vector<double>> e_sin;    // zero under the analog feed
    std::vector<std::vector<double>> decomposition_residual;
};

/// Constant-threshold regimes only; adaptive decomposition is unsupported.
ErrorReport decompose_error(const AnnModel& model, const SnnNetwork& net, const Tensor& sample,
                            int T);

/// The SIN error contribution to each postsynaptic neuron from an explicit
/// presynaptic spike raster: -(1/T) * sum_{j in R} sum_t W_ij * theta_{t,j}.
/// weights: out x in, raster: [step][presyn], sin_mask: presyn flags.
std::vector<double> sin_error_from_raster(const Tensor& weights,
                                          const std::vector<std::vector<std::uint8_t>>& raster,
                                          const std::vector<std::uint8_t>& sin_mask, int T);

struct EnergyReport {
    long long ann_macs = 0;
    long long snn_acs = 0;              // spike-triggered accumulates, layers after the first
    long long snn_bias_acs = 0;         // nonzero-bias adds, once per neuron per step
    long long snn_first_layer_macs = 0; // analog first layer, per step
    int T = 0;
    double ac_pj = 0.9;
    double mac_pj = 4.6;
    double ann_energy_pj = 0.0;
    double snn_energy_pj = 0.0;
    double ratio = 0.0;
    std::vector<double> mean_firing_rate;  // per layer, spikes/(T*M)
};

/// Energy estimate from a recorded spike raster: the first layer is analog
/// and billed as MACs every step, deeper layers as spike-triggered ACs.
EnergyReport energy(const AnnModel& model, const SpikeRaster& raster, int T,
                    double ac_pj = 0.9, double mac_pj = 4.6);

/// Independent brute-force AC recount from a stored raster (no shared
/// counting code with `energy`); used as the accounting oracle.
long long recount_acs(const AnnModel& model, const SpikeRaster& raster);

long long ann_mac_count(const AnnModel& model);
long long first_layer_mac_count(const AnnModel& model);

struct SweepRow {
    Regime regime = Regime::Constant;
    int T = 0;
    double accuracy = 0.0;
    double mean_firing_rate = 0.0;
};

/// Runs the full pipeline for every (regime, T) pair; deterministic given
/// seed. The confidence table is applied only when enabled.
std::vector<SweepRow> accuracy_sweep(const AnnModel& model, const ActivationProfile& profile,
                                     const MsatConfig& base_config, const LabeledDataset& eval_set,
                                     const std::vector<int>& T_list,
                                     const std::vector<Regime>& regimes, std::uint64_t seed,
                                     int jobs = 1,
                                     const SpikeConfidenceTable* confidence = nullptr);

struct EvalResult {
    double accuracy = 0.0;
    std::vector<double> mean_firing_rate;  // per layer
    EnergyReport energy;
    bool has_energy = false;
};

/// Accuracy plus per-layer firing rates (and optionally energy) over a
/// labeled set. The confidence RNG is seeded per sample as seed + index, so
/// the result is independent of the worker count.
EvalResult evaluate(const AnnModel& model, const ActivationProfile& profile,
                    const MsatConfig& config, const LabeledDataset& eval_set, int T,
                    std::uint64_t seed, int jobs, const SpikeConfidenceTable* confidence,
                    bool with_energy, bool potential_readout = false,
                    double ac_pj = 0.9, double mac_pj = 4.6);

}  // namespace snnconv
