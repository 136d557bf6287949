#include "snnconv/calibrate.hpp"

#include <algorithm>

#include "snnconv/errors.hpp"

namespace snnconv {

SinStats measure_sin(const SnnNetwork& net, const ActivationProfile& profile,
                     const LabeledDataset& calib_set, int T) {
    if (!profile.has_pre_relu) {
        throw InputError("measure_sin needs a profile with stored pre-ReLU activations");
    }
    if (profile.pre_relu_samples.size() != calib_set.size()) {
        throw InputError("profile stores " + std::to_string(profile.pre_relu_samples.size()) +
                         " samples but calibration set has " + std::to_string(calib_set.size()));
    }
    if (T < 1) throw ConfigError("measure_sin: T must be >= 1");

    const std::size_t nlayers = net.layers.size();
    SinStats stats;
    stats.T = T;
    stats.num_samples = calib_set.size();
    stats.sin_neuron_ratio.assign(nlayers, 0.0);
    stats.sin_spike_counts.resize(nlayers);
    stats.sin_step_histogram.resize(nlayers);
    for (std::size_t l = 0; l < nlayers; ++l) {
        stats.sin_spike_counts[l].assign(net.layers[l].size(), 0);
        stats.sin_step_histogram[l].assign(static_cast<std::size_t>(T), 0);
    }

    for (std::size_t s = 0; s < calib_set.size(); ++s) {
        SnnNetwork sim = net;
        sim.confidence_enabled = false;
        RunOptions opts;
        opts.record_raster = true;
        RunResult res = run(sim, calib_set.samples[s], T, opts);
        for (std::size_t l = 0; l < nlayers; ++l) {
            const Tensor& pre = profile.pre_relu_samples[s][l];
            if (pre.size() != sim.layers[l].size()) {
                throw InputError("stored pre-ReLU shape mismatch at layer " + std::to_string(l));
            }
            std::size_t in_r = 0;
            for (std::size_t i = 0; i < pre.size(); ++i) {
                const bool sin = pre[i] < 0.0 && sim.layers[l].spike_counts[i] > 0;
                if (!sin) continue;
                ++in_r;
                stats.sin_spike_counts[l][i] += sim.layers[l].spike_counts[i];
                for (int tt = 0; tt < T; ++tt) {
                    stats.sin_step_histogram[l][static_cast<std::size_t>(tt)] +=
                        res.raster.fired[l][static_cast<std::size_t>(tt)][i];
                }
            }
            stats.sin_neuron_ratio[l] += static_cast<double>(in_r) / static_cast<double>(pre.size());
        }
    }
    for (double& r : stats.sin_neuron_ratio) r /= static_cast<double>(calib_set.size());
    return stats;
}

SpikeConfidenceTable derive_confidence(const SinStats& stats, const std::vector<int>& layers,
                                       int early_steps) {
    if (early_steps < 0) throw ConfigError("early_steps must be >= 0");
    const std::size_t nlayers = stats.sin_neuron_ratio.size();
    SpikeConfidenceTable table;
    table.early_steps = early_steps;
    table.p.assign(nlayers, 1.0);
    std::vector<int> selected = layers;
    if (selected.empty() && nlayers > 0) selected.push_back(static_cast<int>(nlayers) - 1);
    for (int l : selected) {
        if (l < 0 || static_cast<std::size_t>(l) >= nlayers) {
            throw ConfigError("confidence layer index " + std::to_string(l) + " out of range");
        }
        table.p[static_cast<std::size_t>(l)] =
            std::clamp(1.0 - stats.sin_neuron_ratio[static_cast<std::size_t>(l)], 0.0, 1.0);
    }
    return table;
}

double ans(const SinStats& stats, std::size_t layer) {
    if (layer >= stats.sin_spike_counts.size()) throw InputError("ans: layer out of range");
    long long total = 0;
    for (long long c : stats.sin_spike_counts[layer]) total += c;
    const double neurons = static_cast<double>(stats.sin_spike_counts[layer].size());
    return static_cast<double>(total) / (neurons * static_cast<double>(stats.num_samples));
}

}  // namespace snnconv
