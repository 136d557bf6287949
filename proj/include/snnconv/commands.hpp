#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace snnconv::commands {

/// The CLI subcommand bodies, kept in the library so tests can drive the
/// exact code paths that write the report artifacts.

struct TrainOptions {
    std::string data_path;
    std::vector<int> arch;  // widths including input and classes
    int epochs = 50;
    double lr = 0.1;
    std::uint64_t seed = 0;
    std::string out_path;
};
int train(const TrainOptions& opts);

struct CalibrateOptions {
    std::string model_path;
    std::string data_path;
    bool store_pre_relu = false;
    std::string out_path;
};
int calibrate(const CalibrateOptions& opts);

struct SimulateOptions {
    std::string model_path;
    std::string profile_path;
    std::string config_path;
    std::string data_path;
    int T = 0;  // 0 = use the config's [simulation] T
    std::string out_path;
    int jobs = 1;
    bool potential_readout = false;
};
int simulate(const SimulateOptions& opts);

struct SweepOptions {
    std::string model_path;
    std::string profile_path;
    std::string config_path;
    std::string data_path;
    std::vector<std::string> regimes;
    std::vector<int> T_list;
    std::string out_path;  // CSV
    int jobs = 1;
};
int sweep(const SweepOptions& opts);

struct AnalyzeSinOptions {
    std::string model_path;
    std::string profile_path;
    std::string config_path;
    std::string data_path;
    int T = 0;
    std::string out_path;
};
int analyze_sin(const AnalyzeSinOptions& opts);

struct EnergyOptions {
    std::string model_path;
    std::string profile_path;
    std::string config_path;
    std::string data_path;
    int T = 0;
    std::string out_path;
    int jobs = 1;
};
int energy(const EnergyOptions& opts);

}  // namespace snnconv::commands
