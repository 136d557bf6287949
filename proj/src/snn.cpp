#include "snnconv/snn.hpp"

#include <cmath>

#include "snnconv/errors.hpp"

namespace snnconv {

void SnnNetwork::reset() {
    for (SnnLayerState& l : layers) l.reset();
    t = 0;
    rng.seed(rng_seed);
}

void SnnNetwork::reseed(std::uint64_t seed) {
    rng_seed = seed;
    rng.seed(seed);
}

bool apply_confidence(bool theta, double p, std::mt19937_64& rng) {
    if (!theta) return false;
    if (p >= 1.0) return true;
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return u < p;
}

SnnNetwork convert(const AnnModel& model, const ActivationProfile& profile, Regime regime,
                   const MsatConfig& config) {
    return convert(std::make_shared<AnnModel>(model), profile, regime, config);
}

SnnNetwork convert(std::shared_ptr<const AnnModel> model, const ActivationProfile& profile,
                   Regime regime, const MsatConfig& config) {
    SnnNetwork net;
    net.model = std::move(model);
    net.blocks = segment_blocks(*net.model);
    if (profile.max_post_relu.size() != net.blocks.size()) {
        throw ConfigError("profile covers " + std::to_string(profile.max_post_relu.size()) +
                          " layers but model has " + std::to_string(net.blocks.size()));
    }
    net.config = config;
    net.config.regime = regime;
    net.config.validate();

    // propagate shapes to find each IF layer's shape (at the ReLU position)
    std::vector<std::size_t> shape = net.model->input_shape;
    for (std::size_t l = 0; l < net.blocks.size(); ++l) {
        Tensor probe = Tensor::zeros(shape);
        Tensor out = apply_block(*net.model, net.blocks[l], probe);
        const double base = profile.max_post_relu[l];
        if (!(base > 0.0)) {
            throw ConfigError("layer " + std::to_string(l) +
                              " has calibrated threshold " + std::to_string(base) +
                              "; a dead layer cannot be converted");
        }
        SnnLayerState st;
        st.init(out.shape, base);
        net.layers.push_back(std::move(st));
        shape = out.shape;
    }
    net.confidence.p.assign(net.blocks.size(), 1.0);
    net.confidence.early_steps = config.early_steps;
    return net;
}

const std::vector<std::uint8_t>& step(SnnNetwork& net, const Tensor& input) {
    if (net.T > 0 && net.t >= net.T) {
        throw StateError("step called past the configured horizon T=" + std::to_string(net.T));
    }
    Tensor signal = input;
    for (std::size_t l = 0; l < net.blocks.size(); ++l) {
        SnnLayerState& st = net.layers[l];
        const Tensor z = apply_block(*net.model, net.blocks[l], signal);

        for (std::size_t i = 0; i < st.size(); ++i) {
            st.v_before_prev[i] = st.v_before[i];
            st.v_before[i] = st.v_after[i] + static_cast<long double>(z[i]);
        }
        // thresholds for this step from last step's post-fire state and the
        // incoming depolarization, before the firing decision
        update_threshold(st, net.config, l);

        const bool filter_here = net.confidence_enabled && net.t < net.confidence.early_steps &&
                                 l < net.confidence.p.size() && net.confidence.p[l] < 1.0;
        const bool last = (l + 1 == net.blocks.size());
        signal = Tensor::zeros(st.shape);
        for (std::size_t i = 0; i < st.size(); ++i) {
            bool theta = false;
            if (!(last && net.potential_readout)) {
                theta = (st.v_before[i] - static_cast<long double>(st.threshold[i])) >= 0.0L;
                if (theta && filter_here) {
                    theta = apply_confidence(theta, net.confidence.p[l], net.rng);
                }
            }
            if (theta) {
                // soft reset: vetoed spikes above keep their potential
                st.v_after[i] = st.v_before[i] - static_cast<long double>(st.threshold[i]);
                st.spike_counts[i] += 1;
                st.rate_sum[i] += st.threshold[i];
                signal[i] = st.threshold[i];
            } else {
                st.v_after[i] = st.v_before[i];
            }
            st.fired_now[i] = theta ? 1 : 0;
            st.v_mean[i] += (static_cast<double>(st.v_after[i]) - st.v_mean[i]) /
                            static_cast<double>(net.t + 1);
        }
    }
    net.t += 1;
    return net.layers.back().fired_now;
}

RunResult run(SnnNetwork& net, const Tensor& input, int T, const RunOptions& opts) {
    if (T < 1) throw ConfigError("T must be >= 1");
    if (net.confidence_enabled && net.confidence.early_steps > T) {
        throw ConfigError("early_steps " + std::to_string(net.confidence.early_steps) +
                          " exceeds simulation horizon T=" + std::to_string(T));
    }
    net.reset();
    net.T = T;
    RunResult res;
    if (opts.record_raster) res.raster.fired.resize(net.layers.size());
    for (int tt = 0; tt < T; ++tt) {
        const std::vector<std::uint8_t>& out = step(net, input);
        res.output_spikes.push_back(out);
        if (opts.record_raster) {
            for (std::size_t l = 0; l < net.layers.size(); ++l) {
                res.raster.fired[l].push_back(net.layers[l].fired_now);
            }
        }
    }
    for (const SnnLayerState& st : net.layers) {
        std::vector<double> r(st.size());
        for (std::size_t i = 0; i < st.size(); ++i) r[i] = st.rate_sum[i] / static_cast<double>(T);
        res.rates.push_back(std::move(r));
    }
    if (net.potential_readout) {
        const SnnLayerState& last = net.layers.back();
        res.output_scores.resize(last.size());
        for (std::size_t i = 0; i < last.size(); ++i) {
            res.output_scores[i] = static_cast<double>(last.v_after[i]) / static_cast<double>(T);
        }
    } else {
        res.output_scores = res.rates.back();
    }
    return res;
}

double clipfloor_oracle(double a, int T, double v_th) {
    if (T < 1) throw ConfigError("clipfloor_oracle: T must be >= 1");
    if (!(v_th > 0.0)) throw ConfigError("clipfloor_oracle: v_th must be > 0");
    const long double n = std::floor(static_cast<long double>(a) * static_cast<long double>(T) /
                                     static_cast<long double>(v_th));
    double r = v_th * static_cast<double>(n) / static_cast<double>(T);
    if (r < 0.0) r = 0.0;
    if (r > v_th) r = v_th;
    return r;
}

}  // namespace snnconv
