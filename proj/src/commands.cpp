#include "snnconv/commands.hpp"

#include <iostream>
#include <json.hpp>
#include <sstream>

#include "snnconv/analysis.hpp"
#include "snnconv/calibrate.hpp"
#include "snnconv/errors.hpp"
#include "snnconv/io.hpp"

namespace snnconv::commands {

using json = nlohmann::ordered_json;

namespace {

struct LoadedPipeline {
    AnnModel model;
    ActivationProfile profile;
    RunConfig config;
    LabeledDataset data;
    std::string cfg_hash;
};

LoadedPipeline load_pipeline(const std::string& model_path, const std::string& profile_path,
                             const std::string& config_path, const std::string& data_path) {
    LoadedPipeline p;
    p.model = load_model(model_path);
    p.profile = load_profile(profile_path);
    p.config = load_run_config(config_path);
    p.data = load_dataset(data_path);
    p.cfg_hash = config_hash(config_path);
    return p;
}

/// Confidence table per the config: measure SIN on the loaded data when the
/// filter is enabled. Pre-ReLU references are recomputed for this dataset so
/// the evaluation set need not be the calibration set; thresholds still come
/// from the loaded profile.
SpikeConfidenceTable build_confidence(const LoadedPipeline& p, int T) {
    ActivationProfile sin_ref = record_profile(p.model, p.data, /*store_pre_relu=*/true);
    sin_ref.max_post_relu = p.profile.max_post_relu;
    MsatConfig constant_cfg = p.config.thresholds;
    constant_cfg.regime = Regime::Constant;
    SnnNetwork net = convert(p.model, sin_ref, Regime::Constant, constant_cfg);
    SinStats stats = measure_sin(net, sin_ref, p.data, T);
    return derive_confidence(stats, p.config.confidence.layers, p.config.confidence.early_steps);
}

int resolve_T(int flag_T, const RunConfig& cfg) {
    const int T = flag_T > 0 ? flag_T : cfg.simulation.T;
    if (T < 1) throw UsageError("T must be >= 1");
    return T;
}

}  // namespace

int train(const TrainOptions& opts) {
    if (opts.out_path.empty()) throw UsageError("missing --out");
    if (opts.arch.size() < 2) throw UsageError("--arch needs at least input and output widths");
    if (opts.epochs < 0) throw UsageError("--epochs must be >= 0");
    LabeledDataset data = load_dataset(opts.data_path);
    double acc = 0.0;
    AnnModel model = train_toy_mlp(data, opts.arch, opts.epochs, opts.lr, opts.seed, &acc);
    save_model(model, opts.out_path);
    std::cout << "train_accuracy " << acc << "\n";
    return 0;
}

int calibrate(const CalibrateOptions& opts) {
    if (opts.out_path.empty()) throw UsageError("missing --out");
    AnnModel model = load_model(opts.model_path);
    LabeledDataset data = load_dataset(opts.data_path);
    ActivationProfile profile = record_profile(model, data, opts.store_pre_relu);
    save_profile(profile, opts.out_path);
    std::cout << "calibrated_layers " << profile.max_post_relu.size() << "\n";
    return 0;
}

int simulate(const SimulateOptions& opts) {
    if (opts.out_path.empty()) throw UsageError("missing --out");
    LoadedPipeline p = load_pipeline(opts.model_path, opts.profile_path, opts.config_path,
                                     opts.data_path);
    const int T = resolve_T(opts.T, p.config);

    SpikeConfidenceTable confidence;
    const bool use_confidence = p.config.confidence.enabled;
    if (use_confidence) confidence = build_confidence(p, T);

    EvalResult ev = evaluate(p.model, p.profile, p.config.thresholds, p.data, T,
                             p.config.simulation.seed + p.config.confidence.seed, opts.jobs,
                             use_confidence ? &confidence : nullptr, /*with_energy=*/true,
                             opts.potential_readout, p.config.energy.ac_pj,
                             p.config.energy.mac_pj);

    json j;
    j["format_version"] = 1;
    j["report"] = "simulate";
    j["meta"] = {{"config_hash", p.cfg_hash}};
    j["regime"] = regime_name(p.config.thresholds.regime);
    j["T"] = T;
    j["seed"] = p.config.simulation.seed;
    j["samples"] = p.data.size();
    j["accuracy"] = ev.accuracy;
    j["mean_firing_rate"] = ev.mean_firing_rate;
    j["confidence_enabled"] = use_confidence;
    if (use_confidence) {
        j["confidence_p"] = confidence.p;
        j["early_steps"] = confidence.early_steps;
    }
    j["energy"] = {{"ann_macs", ev.energy.ann_macs},
                   {"snn_acs", ev.energy.snn_acs},
                   {"snn_bias_acs", ev.energy.snn_bias_acs},
                   {"snn_first_layer_macs", ev.energy.snn_first_layer_macs},
                   {"ac_pj", ev.energy.ac_pj},
                   {"mac_pj", ev.energy.mac_pj},
                   {"ann_energy_pj", ev.energy.ann_energy_pj},
                   {"snn_energy_pj", ev.energy.snn_energy_pj},
                   {"ratio", ev.energy.ratio}};
    write_file(opts.out_path, j.dump(2) + "\n");
    std::cout << "accuracy " << ev.accuracy << " T " << T << " regime "
              << regime_name(p.config.thresholds.regime) << "\n";
    return 0;
}

int sweep(const SweepOptions& opts) {
    if (opts.out_path.empty()) throw UsageError("missing --out");
    if (opts.regimes.empty()) throw UsageError("empty regime list");
    if (opts.T_list.empty()) throw UsageError("empty T list");
    for (int T : opts.T_list)
        if (T < 1) throw UsageError("T values must be >= 1");
    LoadedPipeline p = load_pipeline(opts.model_path, opts.profile_path, opts.config_path,
                                     opts.data_path);
    std::vector<Regime> regimes;
    for (const std::string& r : opts.regimes) regimes.push_back(regime_from_string(r));

    SpikeConfidenceTable confidence;
    const bool use_confidence = p.config.confidence.enabled;
    if (use_confidence) {
        int max_T = 0;
        for (int T : opts.T_list) max_T = std::max(max_T, T);
        confidence = build_confidence(p, max_T);
    }

    std::vector<SweepRow> rows =
        accuracy_sweep(p.model, p.profile, p.config.thresholds, p.data, opts.T_list, regimes,
                       p.config.simulation.seed, opts.jobs,
                       use_confidence ? &confidence : nullptr);

    std::ostringstream os;
    os.precision(17);
    os << "regime,T,accuracy,mean_firing_rate\n";
    for (const SweepRow& row : rows) {
        os << regime_name(row.regime) << "," << row.T << "," << row.accuracy << ","
           << row.mean_firing_rate << "\n";
    }
    write_file(opts.out_path, os.str());
    std::cout << "rows " << rows.size() << "\n";
    return 0;
}

int analyze_sin(const AnalyzeSinOptions& opts) {
    if (opts.out_path.empty()) throw UsageError("missing --out");
    LoadedPipeline p = load_pipeline(opts.model_path, opts.profile_path, opts.config_path,
                                     opts.data_path);
    const int T = resolve_T(opts.T, p.config);
    if (!p.profile.has_pre_relu) {
        throw ConfigError("analyze-sin needs a profile recorded with --store-pre-relu "
                          "(rerun calibrate with that flag)");
    }
    MsatConfig cfg = p.config.thresholds;
    cfg.regime = Regime::Constant;
    SnnNetwork net = convert(p.model, p.profile, Regime::Constant, cfg);
    SinStats stats = measure_sin(net, p.profile, p.data, T);
    SpikeConfidenceTable table =
        derive_confidence(stats, p.config.confidence.layers, p.config.confidence.early_steps);

    json j;
    j["format_version"] = 1;
    j["report"] = "analyze-sin";
    j["meta"] = {{"config_hash", p.cfg_hash}};
    j["T"] = T;
    j["samples"] = stats.num_samples;
    j["sin_neuron_ratio"] = stats.sin_neuron_ratio;
    json ans_per_layer = json::array();
    for (std::size_t l = 0; l < stats.sin_neuron_ratio.size(); ++l) ans_per_layer.push_back(ans(stats, l));
    j["ans"] = ans_per_layer;
    j["sin_step_histogram"] = stats.sin_step_histogram;
    j["confidence_p"] = table.p;
    j["early_steps"] = table.early_steps;
    write_file(opts.out_path, j.dump(2) + "\n");
    for (std::size_t l = 0; l < stats.sin_neuron_ratio.size(); ++l) {
        std::cout << "layer " << l << " sin_ratio " << stats.sin_neuron_ratio[l] << " ans "
                  << ans(stats, l) << "\n";
    }
    return 0;
}

int energy(const EnergyOptions& opts) {
    if (opts.out_path.empty()) throw UsageError("missing --out");
    LoadedPipeline p = load_pipeline(opts.model_path, opts.profile_path, opts.config_path,
                                     opts.data_path);
    const int T = resolve_T(opts.T, p.config);
    EvalResult ev = evaluate(p.model, p.profile, p.config.thresholds, p.data, T,
                             p.config.simulation.seed, opts.jobs, nullptr, /*with_energy=*/true,
                             false, p.config.energy.ac_pj, p.config.energy.mac_pj);
    json j;
    j["format_version"] = 1;
    j["report"] = "energy";
    j["meta"] = {{"config_hash", p.cfg_hash}};
    j["T"] = T;
    j["ann_macs"] = ev.energy.ann_macs;
    j["snn_acs"] = ev.energy.snn_acs;
    j["snn_bias_acs"] = ev.energy.snn_bias_acs;
    j["snn_first_layer_macs"] = ev.energy.snn_first_layer_macs;
    j["ac_pj"] = ev.energy.ac_pj;
    j["mac_pj"] = ev.energy.mac_pj;
    j["ann_energy_pj"] = ev.energy.ann_energy_pj;
    j["snn_energy_pj"] = ev.energy.snn_energy_pj;
    j["ratio"] = ev.energy.ratio;
    j["mean_firing_rate"] = ev.energy.mean_firing_rate;
    write_file(opts.out_path, j.dump(2) + "\n");
    std::cout << "energy_ratio " << ev.energy.ratio << "\n";
    return 0;
}

}  // namespace snnconv::commands
