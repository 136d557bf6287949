#pragma once

#include <string>
#include <vector>

#include "snnconv/snn_state.hpp"

namespace snnconv {

enum class Regime { Constant, Dtt, Det, Msat };

Regime regime_from_string(const std::string& s);
std::string regime_name(Regime r);

/// The six threshold hyperparameters plus the per-layer DTT offset, the
/// early-step horizon and the regime selector. Defaults are the VGG-family
/// values; resnet20_defaults()/resnet34_defaults() give the other families.
struct MsatConfig {
    double alpha = 0.03;          // left-side slope
    double k_a = 1.0;             // right-side slope numerator
    double k_i = 1.0;             // right-side slope denominator
    double c_sensitivity = 5.0;   // input sensitivity C
    double tau_mp = 1.0;          // DTT coefficient
    double tau_rd = 1.0;          // DET coefficient
    std::vector<double> v_T;      // per-layer DTT offset; empty = 0 everywhere
    int early_steps = 16;
    Regime regime = Regime::Constant;

    double v_t_for_layer(std::size_t layer) const {
        if (v_T.empty()) return 0.0;
        return layer < v_T.size() ? v_T[layer] : v_T.back();
    }

    static MsatConfig vgg_defaults();
    static MsatConfig resnet20_defaults();
    static MsatConfig resnet34_defaults();

    /// Throws ConfigError on invalid values, including the degenerate
    /// adaptive regime with tau_mp == tau_rd == 0.
    void validate() const;
};

/// Dynamic tracking threshold component:
/// alpha*(V - V_m) + V_T + k_a*ln(1 + exp((V - V_m)/k_i)), softplus
/// stabilized for large arguments.
double dtt(double v_after, double v_mean, const MsatConfig& cfg, std::size_t layer);

/// Dynamic evoked threshold component: tau_rd * exp(-dV/C), with the
/// depolarization difference clamped to [-50C, 50C].
double det(double v_before_now, double v_before_prev, const MsatConfig& cfg);

/// Per-neuron coefficient in (0,1) applied to the calibrated base threshold.
double threshold_coefficient(double v_after, double v_mean, double v_before_now,
                             double v_before_prev, const MsatConfig& cfg, std::size_t layer);

/// Recomputes the per-neuron thresholds of a layer from its current state.
/// Under Regime::Constant the thresholds are left untouched.
void update_threshold(SnnLayerState& state, const MsatConfig& cfg, std::size_t layer);

}  // namespace snnconv
