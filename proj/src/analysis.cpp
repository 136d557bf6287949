#include "snnconv/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "snnconv/errors.hpp"
#include "snnconv/parallel.hpp"

namespace snnconv {

ErrorReport decompose_error(const AnnModel& model, const SnnNetwork& net, const Tensor& sample,
                            int T) {
    if (net.config.regime != Regime::Constant) {
        throw ConfigError("error decomposition is defined for the constant-threshold regime only");
    }
    if (T < 1) throw ConfigError("decompose_error: T must be >= 1");

    ForwardCapture cap;
    forward(model, sample, &cap);
    const std::vector<Block> blocks = segment_blocks(model);

    ErrorReport report;
    for (std::size_t l = 0; l < blocks.size(); ++l) {
        const Tensor& input = (l == 0) ? sample : cap.post_relu[l - 1];
        const Tensor z = apply_block(model, blocks[l], input);  // constant every step
        const double vth = net.layers[l].base_threshold;

        // single-layer constant-input run, same arithmetic as the simulator
        const std::size_t n = z.size();
        std::vector<long double> v(n, 0.0L);
        std::vector<double> rate_sum(n, 0.0);
        for (int tt = 0; tt < T; ++tt) {
            for (std::size_t i = 0; i < n; ++i) {
                const long double vb = v[i] + static_cast<long double>(z[i]);
                if (vb - static_cast<long double>(vth) >= 0.0L) {
                    v[i] = vb - static_cast<long double>(vth);
                    rate_sum[i] += vth;
                } else {
                    v[i] = vb;
                }
            }
        }

        std::vector<double> e_total(n), e_qc(n), e_sin(n, 0.0), resid(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double a = cap.post_relu[l][i];
            const double r = rate_sum[i] / static_cast<double>(T);
            e_total[i] = r - a;
            e_qc[i] = clipfloor_oracle(cap.pre_relu[l][i], T, vth) - a;
            resid[i] = e_total[i] - e_qc[i] - e_sin[i];
        }
        report.e_total.push_back(std::move(e_total));
        report.e_qc.push_back(std::move(e_qc));
        report.e_sin.push_back(std::move(e_sin));
        report.decomposition_residual.push_back(std::move(resid));
    }
    return report;
}

std::vector<double> sin_error_from_raster(const Tensor& weights,
                                          const std::vector<std::vector<std::uint8_t>>& raster,
                                          const std::vector<std::uint8_t>& sin_mask, int T) {
    if (weights.rank() != 2) throw DimensionError("sin_error_from_raster expects out x in weights");
    const std::size_t out = weights.shape[0], in = weights.shape[1];
    if (sin_mask.size() != in) throw DimensionError("sin mask size must equal presynaptic count");
    std::vector<double> err(out, 0.0);
    for (const std::vector<std::uint8_t>& stepfired : raster) {
        if (stepfired.size() != in) throw DimensionError("raster width must equal presynaptic count");
        for (std::size_t j = 0; j < in; ++j) {
            if (!sin_mask[j] || !stepfired[j]) continue;
            for (std::size_t i = 0; i < out; ++i) err[i] -= weights.at2(i, j);
        }
    }
    for (double& e : err) e /= static_cast<double>(T);
    return err;
}

namespace {

struct ShapeWalk {
    std::vector<std::vector<std::size_t>> block_input_shapes;  // per block
    std::vector<std::vector<std::size_t>> block_output_shapes;
};

ShapeWalk walk_shapes(const AnnModel& model, const std::vector<Block>& blocks) {
    ShapeWalk w;
    std::vector<std::size_t> shape = model.input_shape;
    for (const Block& b : blocks) {
        w.block_input_shapes.push_back(shape);
        Tensor probe = Tensor::zeros(shape);
        Tensor out = apply_block(model, b, probe);
        shape = out.shape;
        w.block_output_shapes.push_back(shape);
    }
    return w;
}

long long layer_macs(const Layer& l, const std::vector<std::size_t>& in_shape,
                     const std::vector<std::size_t>& out_shape) {
    if (l.kind == LayerKind::Dense) {
        return static_cast<long long>(l.weights.shape[0]) *
               static_cast<long long>(l.weights.shape[1]);
    }
    if (l.kind == LayerKind::Conv2d) {
        (void)in_shape;
        return static_cast<long long>(out_shape[0]) * static_cast<long long>(out_shape[1]) *
               static_cast<long long>(out_shape[2]) * static_cast<long long>(l.weights.shape[1]) *
               static_cast<long long>(l.weights.shape[2]) * static_cast<long long>(l.weights.shape[3]);
    }
    return 0;
}

std::vector<std::size_t> op_output_shape(const AnnModel& model, int op_index,
                                         const std::vector<std::size_t>& in) {
    Tensor probe = Tensor::zeros(in);
    const Layer& l = model.layers[static_cast<std::size_t>(op_index)];
    // reuse forward machinery through a one-op block
    AnnModel tmp;
    Block b;
    b.op_indices.push_back(0);
    tmp.layers.push_back(l);
    tmp.input_shape = in;
    return apply_block(tmp, b, probe).shape;
}

/// Counts spike-triggered accumulates for one block given the active mask of
/// its input, propagating activity op by op. avgpool adds one AC per active
/// input; dense/conv add one AC per (active input, reading output) pair.
long long count_block_acs(const AnnModel& model, const Block& block,
                          std::vector<std::size_t> shape, std::vector<std::uint8_t> active) {
    long long acs = 0;
    for (int idx : block.op_indices) {
        const Layer& l = model.layers[static_cast<std::size_t>(idx)];
        switch (l.kind) {
            case LayerKind::Flatten: {
                shape = {shape_product(shape)};
                break;
            }
            case LayerKind::AvgPool: {
                const std::size_t c = shape[0], h = shape[1], w = shape[2];
                const std::size_t uw = static_cast<std::size_t>(l.window);
                const std::size_t oh = h / uw, ow = w / uw;
                std::vector<std::uint8_t> out(c * oh * ow, 0);
                for (std::size_t ci = 0; ci < c; ++ci)
                    for (std::size_t oy = 0; oy < oh; ++oy)
                        for (std::size_t ox = 0; ox < ow; ++ox) {
                            bool any = false;
                            for (std::size_t dy = 0; dy < uw; ++dy)
                                for (std::size_t dx = 0; dx < uw; ++dx) {
                                    const std::size_t ii =
                                        (ci * h + oy * uw + dy) * w + ox * uw + dx;
                                    if (active[ii]) {
                                        ++acs;
                                        any = true;
                                    }
                                }
                            out[(ci * oh + oy) * ow + ox] = any ? 1 : 0;
                        }
                active = std::move(out);
                shape = {c, oh, ow};
                break;
            }
            case LayerKind::Dense: {
                const std::size_t out_n = l.weights.shape[0];
                std::size_t n_active = 0;
                for (std::uint8_t a : active) n_active += a;
                acs += static_cast<long long>(n_active) * static_cast<long long>(out_n);
                active.assign(out_n, n_active > 0 ? 1 : 0);
                shape = {out_n};
                break;
            }
            case LayerKind::Conv2d: {
                const std::size_t c_in = shape[0], h = shape[1], w = shape[2];
                const std::size_t c_out = l.weights.shape[0], kh = l.weights.shape[2],
                                  kw = l.weights.shape[3];
                const std::vector<std::size_t> oshape = op_output_shape(model, idx, shape);
                const std::size_t oh = oshape[1], ow = oshape[2];
                std::vector<std::uint8_t> out(c_out * oh * ow, 0);
                for (std::size_t oy = 0; oy < oh; ++oy)
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        long long active_taps = 0;
                        for (std::size_t ci = 0; ci < c_in; ++ci)
                            for (std::size_t ky = 0; ky < kh; ++ky) {
                                const long iy = static_cast<long>(oy) * l.stride +
                                                static_cast<long>(ky) - l.padding;
                                if (iy < 0 || iy >= static_cast<long>(h)) continue;
                                for (std::size_t kx = 0; kx < kw; ++kx) {
                                    const long ix = static_cast<long>(ox) * l.stride +
                                                    static_cast<long>(kx) - l.padding;
                                    if (ix < 0 || ix >= static_cast<long>(w)) continue;
                                    if (active[(ci * h + static_cast<std::size_t>(iy)) * w +
                                               static_cast<std::size_t>(ix)])
                                        ++active_taps;
                                }
                            }
                        acs += active_taps * static_cast<long long>(c_out);
                        if (active_taps > 0)
                            for (std::size_t co = 0; co < c_out; ++co)
                                out[(co * oh + oy) * ow + ox] = 1;
                    }
                active = std::move(out);
                shape = oshape;
                break;
            }
            case LayerKind::Relu:
                break;
        }
    }
    return acs;
}

long long nonzero_bias_count(const AnnModel& model, const Block& block,
                             const std::vector<std::size_t>& out_shape) {
    const Layer& l = model.layers[static_cast<std::size_t>(block.param_index)];
    long long n = 0;
    if (l.kind == LayerKind::Dense) {
        for (double b : l.bias.data)
            if (b != 0.0) ++n;
    } else if (l.kind == LayerKind::Conv2d) {
        const long long plane = static_cast<long long>(out_shape[1]) *
                                static_cast<long long>(out_shape[2]);
        for (double b : l.bias.data)
            if (b != 0.0) n += plane;
    }
    return n;
}

}  // namespace

long long ann_mac_count(const AnnModel& model) {
    const std::vector<Block> blocks = segment_blocks(model);
    const ShapeWalk w = walk_shapes(model, blocks);
    long long macs = 0;
    for (std::size_t l = 0; l < blocks.size(); ++l) {
        std::vector<std::size_t> shape = w.block_input_shapes[l];
        for (int idx : blocks[l].op_indices) {
            const std::vector<std::size_t> out = op_output_shape(model, idx, shape);
            macs += layer_macs(model.layers[static_cast<std::size_t>(idx)], shape, out);
            shape = out;
        }
    }
    return macs;
}

long long first_layer_mac_count(const AnnModel& model) {
    const std::vector<Block> blocks = segment_blocks(model);
    const ShapeWalk w = walk_shapes(model, blocks);
    std::vector<std::size_t> shape = w.block_input_shapes[0];
    long long macs = 0;
    for (int idx : blocks[0].op_indices) {
        const std::vector<std::size_t> out = op_output_shape(model, idx, shape);
        macs += layer_macs(model.layers[static_cast<std::size_t>(idx)], shape, out);
        shape = out;
    }
    return macs;
}

EnergyReport energy(const AnnModel& model, const SpikeRaster& raster, int T,
                    double ac_pj, double mac_pj) {
    if (T < 1) throw ConfigError("energy: T must be >= 1");
    const std::vector<Block> blocks = segment_blocks(model);
    if (raster.fired.size() != blocks.size()) {
        throw InputError("raster layer count does not match the model");
    }
    const ShapeWalk w = walk_shapes(model, blocks);

    EnergyReport rep;
    rep.T = T;
    rep.ac_pj = ac_pj;
    rep.mac_pj = mac_pj;
    rep.ann_macs = ann_mac_count(model);
    rep.snn_first_layer_macs = first_layer_mac_count(model);

    for (std::size_t l = 0; l < blocks.size(); ++l) {
        long long spikes = 0;
        for (const std::vector<std::uint8_t>& stepfired : raster.fired[l])
            for (std::uint8_t f : stepfired) spikes += f;
        rep.mean_firing_rate.push_back(
            static_cast<double>(spikes) /
            (static_cast<double>(T) * static_cast<double>(shape_product(w.block_output_shapes[l]))));
    }

    // incremental pass over the trace, step by step
    for (int tt = 0; tt < T; ++tt) {
        for (std::size_t l = 1; l < blocks.size(); ++l) {
            const std::vector<std::uint8_t>& active =
                raster.fired[l - 1][static_cast<std::size_t>(tt)];
            rep.snn_acs += count_block_acs(model, blocks[l], w.block_input_shapes[l], active);
        }
        for (std::size_t l = 0; l < blocks.size(); ++l) {
            rep.snn_bias_acs += nonzero_bias_count(model, blocks[l], w.block_output_shapes[l]);
        }
    }

    rep.ann_energy_pj = mac_pj * static_cast<double>(rep.ann_macs);
    rep.snn_energy_pj = mac_pj * static_cast<double>(rep.snn_first_layer_macs) *
                            static_cast<double>(T) +
                        ac_pj * static_cast<double>(rep.snn_acs + rep.snn_bias_acs);
    rep.ratio = rep.snn_energy_pj / rep.ann_energy_pj;
    return rep;
}

long long recount_acs(const AnnModel& model, const SpikeRaster& raster) {
    // Deliberately independent of count_block_acs: walks the ops with its own
    // loops, layer-major rather than step-major.
    const std::vector<Block> blocks = segment_blocks(model);
    const ShapeWalk w = walk_shapes(model, blocks);
    long long acs = 0;
    for (std::size_t l = 1; l < blocks.size(); ++l) {
        for (const std::vector<std::uint8_t>& stepfired : raster.fired[l - 1]) {
            std::vector<std::uint8_t> active = stepfired;
            std::vector<std::size_t> shape = w.block_input_shapes[l];
            for (int idx : blocks[l].op_indices) {
                const Layer& layer = model.layers[static_cast<std::size_t>(idx)];
                if (layer.kind == LayerKind::Flatten) {
                    shape = {shape_product(shape)};
                } else if (layer.kind == LayerKind::AvgPool) {
                    const std::size_t c = shape[0], h = shape[1], ww = shape[2];
                    const std::size_t uw = static_cast<std::size_t>(layer.window);
                    std::vector<std::uint8_t> pooled(c * (h / uw) * (ww / uw), 0);
                    for (std::size_t i = 0; i < active.size(); ++i) {
                        if (!active[i]) continue;
                        ++acs;
                        const std::size_t ci = i / (h * ww);
                        const std::size_t y = (i / ww) % h;
                        const std::size_t x = i % ww;
                        pooled[(ci * (h / uw) + y / uw) * (ww / uw) + x / uw] = 1;
                    }
                    active = std::move(pooled);
                    shape = {c, h / uw, ww / uw};
                } else if (layer.kind == LayerKind::Dense) {
                    const std::size_t out_n = layer.weights.shape[0];
                    bool any = false;
                    for (std::size_t j = 0; j < active.size(); ++j) {
                        if (!active[j]) continue;
                        any = true;
                        acs += static_cast<long long>(out_n);
                    }
                    active.assign(out_n, any ? 1 : 0);
                    shape = {out_n};
                } else if (layer.kind == LayerKind::Conv2d) {
                    const std::size_t c_in = shape[0], h = shape[1], ww = shape[2];
                    const std::size_t c_out = layer.weights.shape[0],
                                      kh = layer.weights.shape[2], kw = layer.weights.shape[3];
                    const std::vector<std::size_t> oshape = op_output_shape(model, idx, shape);
                    std::vector<std::uint8_t> out(shape_product(oshape), 0);
                    const std::size_t oh = oshape[1], ow = oshape[2];
                    for (std::size_t i = 0; i < active.size(); ++i) {
                        if (!active[i]) continue;
                        const std::size_t ci = i / (h * ww);
                        (void)ci;
                        const long y = static_cast<long>((i / ww) % h);
                        const long x = static_cast<long>(i % ww);
                        // every (output position, kernel tap) reading this input
                        for (std::size_t ky = 0; ky < kh; ++ky) {
                            const long oy_num = y + layer.padding - static_cast<long>(ky);
                            if (oy_num < 0 || oy_num % layer.stride != 0) continue;
                            const long oy = oy_num / layer.stride;
                            if (oy >= static_cast<long>(oh)) continue;
                            for (std::size_t kx = 0; kx < kw; ++kx) {
                                const long ox_num = x + layer.padding - static_cast<long>(kx);
                                if (ox_num < 0 || ox_num % layer.stride != 0) continue;
                                const long ox = ox_num / layer.stride;
                                if (ox >= static_cast<long>(ow)) continue;
                                acs += static_cast<long long>(c_out);
                                for (std::size_t co = 0; co < c_out; ++co)
                                    out[(co * oh + static_cast<std::size_t>(oy)) * ow +
                                        static_cast<std::size_t>(ox)] = 1;
                            }
                        }
                    }
                    active = std::move(out);
                    shape = oshape;
                }
            }
        }
    }
    return acs;
}

EvalResult evaluate(const AnnModel& model, const ActivationProfile& profile,
                    const MsatConfig& config, const LabeledDataset& eval_set, int T,
                    std::uint64_t seed, int jobs, const SpikeConfidenceTable* confidence,
                    bool with_energy, bool potential_readout, double ac_pj, double mac_pj) {
    if (eval_set.size() == 0) throw InputError("evaluate: empty dataset");
    auto shared = std::make_shared<AnnModel>(model);
    SnnNetwork proto = convert(shared, profile, config.regime, config);
    proto.potential_readout = potential_readout;
    if (confidence) {
        proto.confidence = *confidence;
        proto.confidence_enabled = true;
    }

    const std::size_t n = eval_set.size();
    std::vector<std::uint8_t> hits(n, 0);
    const std::size_t nlayers = proto.layers.size();
    std::vector<std::vector<long long>> spikes(n, std::vector<long long>(nlayers, 0));
    std::vector<long long> acs(n, 0), bias_acs(n, 0);
    std::vector<std::size_t> layer_sizes;
    for (const SnnLayerState& st : proto.layers) layer_sizes.push_back(st.size());

    parallel_for(n, jobs, [&](std::size_t i) {
        SnnNetwork net = proto;
        net.reseed(seed + i);
        RunOptions opts;
        opts.record_raster = with_energy;
        RunResult res = run(net, eval_set.samples[i], T, opts);
        const auto arg = std::max_element(res.output_scores.begin(), res.output_scores.end());
        hits[i] = (static_cast<int>(arg - res.output_scores.begin()) == eval_set.labels[i]) ? 1 : 0;
        for (std::size_t l = 0; l < nlayers; ++l) spikes[i][l] = net.layers[l].spike_counts.empty()
            ? 0
            : [&] {
                  long long s = 0;
                  for (long long c : net.layers[l].spike_counts) s += c;
                  return s;
              }();
        if (with_energy) {
            EnergyReport er = energy(model, res.raster, T, ac_pj, mac_pj);
            acs[i] = er.snn_acs;
            bias_acs[i] = er.snn_bias_acs;
        }
    });

    EvalResult out;
    std::size_t correct = 0;
    for (std::uint8_t h : hits) correct += h;
    out.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    out.mean_firing_rate.assign(nlayers, 0.0);
    for (std::size_t l = 0; l < nlayers; ++l) {
        long long total = 0;
        for (std::size_t i = 0; i < n; ++i) total += spikes[i][l];
        out.mean_firing_rate[l] = static_cast<double>(total) /
                                  (static_cast<double>(n) * static_cast<double>(T) *
                                   static_cast<double>(layer_sizes[l]));
    }
    if (with_energy) {
        EnergyReport rep;
        rep.T = T;
        rep.ac_pj = ac_pj;
        rep.mac_pj = mac_pj;
        rep.ann_macs = ann_mac_count(model);
        rep.snn_first_layer_macs = first_layer_mac_count(model);
        for (std::size_t i = 0; i < n; ++i) {
            rep.snn_acs += acs[i];
            rep.snn_bias_acs += bias_acs[i];
        }
        // mean per sample
        rep.snn_acs /= static_cast<long long>(n);
        rep.snn_bias_acs /= static_cast<long long>(n);
        rep.mean_firing_rate = out.mean_firing_rate;
        rep.ann_energy_pj = mac_pj * static_cast<double>(rep.ann_macs);
        rep.snn_energy_pj = mac_pj * static_cast<double>(rep.snn_first_layer_macs) *
                                static_cast<double>(T) +
                            ac_pj * static_cast<double>(rep.snn_acs + rep.snn_bias_acs);
        rep.ratio = rep.snn_energy_pj / rep.ann_energy_pj;
        out.energy = rep;
        out.has_energy = true;
    }
    return out;
}

std::vector<SweepRow> accuracy_sweep(const AnnModel& model, const ActivationProfile& profile,
                                     const MsatConfig& base_config, const LabeledDataset& eval_set,
                                     const std::vector<int>& T_list,
                                     const std::vector<Regime>& regimes, std::uint64_t seed,
                                     int jobs, const SpikeConfidenceTable* confidence) {
    if (regimes.empty()) throw InputError("accuracy_sweep: empty regime list");
    if (T_list.empty()) throw InputError("accuracy_sweep: empty T list");
    std::vector<SweepRow> rows;
    for (Regime regime : regimes) {
        MsatConfig cfg = base_config;
        cfg.regime = regime;
        for (int T : T_list) {
            if (T < 1) throw ConfigError("accuracy_sweep: T must be >= 1");
            EvalResult ev = evaluate(model, profile, cfg, eval_set, T, seed, jobs, confidence,
                                     /*with_energy=*/false);
            double mean_rate = 0.0;
            for (double r : ev.mean_firing_rate) mean_rate += r;
            mean_rate /= static_cast<double>(ev.mean_firing_rate.size());
            rows.push_back(SweepRow{regime, T, ev.accuracy, mean_rate});
        }
    }
    return rows;
}

}  // namespace snnconv
