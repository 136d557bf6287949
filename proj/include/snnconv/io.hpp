#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snnconv/analysis.hpp"
#include "snnconv/model.hpp"
#include "snnconv/msat.hpp"

namespace snnconv {

/// Standard base64 of little-endian float32 payloads.
std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);
std::string floats_to_base64(const std::vector<double>& values);  // narrowed to f32
std::vector<double> base64_to_floats(const std::string& text);    // widened to f64

/// Model file: JSON, format_version 1, float32 weights in base64, row-major.
/// save -> load -> save is byte-identical.
void save_model(const AnnModel& model, const std::string& path);
AnnModel load_model(const std::string& path);

/// Dataset file: one sample per line, integer label then comma-separated
/// features; an optional leading "# features <n>" header pins the arity.
LabeledDataset load_dataset(const std::string& path);
void save_dataset(const LabeledDataset& ds, const std::string& path);

void save_profile(const ActivationProfile& profile, const std::string& path);
ActivationProfile load_profile(const std::string& path);

/// INI-style run configuration; unknown sections or keys are rejected.
struct RunConfig {
    MsatConfig thresholds;            // regime + threshold hyperparameters + v_T
    struct Confidence {
        bool enabled = false;
        std::vector<int> layers;      // empty = last IF layer
        int early_steps = 16;
        std::uint64_t seed = 0;
    } confidence;
    struct Simulation {
        int T = 32;
        std::uint64_t seed = 0;
    } simulation;
    struct Energy {
        double ac_pj = 0.9;
        double mac_pj = 4.6;
    } energy;
};

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& cfg, const std::string& path);

/// FNV-1a over the file bytes, reported in run artifacts for provenance.
std::string config_hash(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace snnconv
