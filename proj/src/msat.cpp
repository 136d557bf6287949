#include "snnconv/msat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "snnconv/errors.hpp"

namespace snnconv {

Regime regime_from_string(const std::string& s) {
    if (s == "constant") return Regime::Constant;
    if (s == "dtt") return Regime::Dtt;
    if (s == "det") return Regime::Det;
    if (s == "msat") return Regime::Msat;
    throw ConfigError("unknown regime '" + s + "' (expected constant|dtt|det|msat)");
}

std::string regime_name(Regime r) {
    switch (r) {
        case Regime::Constant: return "constant";
        case Regime::Dtt: return "dtt";
        case Regime::Det: return "det";
        case Regime::Msat: return "msat";
    }
    return "?";
}

MsatConfig MsatConfig::vgg_defaults() {
    return MsatConfig{};  // alpha 0.03, k_a 1, k_i 1, C 5, tau_mp 1, tau_rd 1
}

MsatConfig MsatConfig::resnet20_defaults() {
    MsatConfig c;
    c.alpha = 0.3;
    c.tau_mp = 0.5;
    c.tau_rd = 0.5;
    return c;
}

MsatConfig MsatConfig::resnet34_defaults() {
    MsatConfig c;
    c.alpha = 1.0;
    c.tau_mp = 0.5;
    c.tau_rd = 0.5;
    return c;
}

void MsatConfig::validate() const {
    if (!(k_i > 0.0)) throw ConfigError("k_i must be > 0");
    if (!(c_sensitivity > 0.0)) throw ConfigError("C must be > 0");
    if (tau_mp < 0.0) throw ConfigError("tau_mp must be >= 0");
    if (tau_rd < 0.0) throw ConfigError("tau_rd must be >= 0");
    if (early_steps < 0) throw ConfigError("early_steps must be >= 0");
    if (regime != Regime::Constant && tau_mp == 0.0 && tau_rd == 0.0) {
        throw ConfigError("degenerate adaptive regime: tau_mp and tau_rd are both 0, "
                          "coefficient would be constant 0.5");
    }
}

namespace {

double softplus(double x) {
    // ln(1 + e^x), written to avoid overflow for large x
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    // clamped to the open interval so a scaled threshold is always strictly
    // positive and strictly below the calibrated base, even when the
    // double-precision sigmoid would saturate
    double s;
    if (x >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        s = e / (1.0 + e);
    }
    const double lo = std::numeric_limits<double>::min();
    const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(s, lo, hi);
}

}  // namespace

double dtt(double v_after, double v_mean, const MsatConfig& cfg, std::size_t layer) {
    const double gap = v_after - v_mean;
    return cfg.alpha * gap + cfg.v_t_for_layer(layer) + cfg.k_a * softplus(gap / cfg.k_i);
}

double det(double v_before_now, double v_before_prev, const MsatConfig& cfg) {
    const double bound = 50.0 * cfg.c_sensitivity;
    const double dv = std::clamp(v_before_now - v_before_prev, -bound, bound);
    return cfg.tau_rd * std::exp(-dv / cfg.c_sensitivity);
}

double threshold_coefficient(double v_after, double v_mean, double v_before_now,
                             double v_before_prev, const MsatConfig& cfg, std::size_t layer) {
    double arg = 0.0;
    switch (cfg.regime) {
        case Regime::Constant:
            return 1.0;
        case Regime::Dtt:
            arg = cfg.tau_mp * dtt(v_after, v_mean, cfg, layer);
            break;
        case Regime::Det:
            arg = det(v_before_now, v_before_prev, cfg);
            break;
        case Regime::Msat:
            arg = cfg.tau_mp * dtt(v_after, v_mean, cfg, layer) +
                  det(v_before_now, v_before_prev, cfg);
            break;
    }
    return sigmoid(arg);
}

void update_threshold(SnnLayerState& state, const MsatConfig& cfg, std::size_t layer) {
    if (cfg.regime == Regime::Constant) return;
    for (std::size_t i = 0; i < state.size(); ++i) {
        const double coef = threshold_coefficient(
            static_cast<double>(state.v_after[i]), state.v_mean[i],
            static_cast<double>(state.v_before[i]), static_cast<double>(state.v_before_prev[i]),
            cfg, layer);
        state.threshold[i] = coef * state.base_threshold;
    }
}

}  // namespace snnconv
