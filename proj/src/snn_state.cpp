#include "snnconv/snn_state.hpp"

#include "snnconv/tensor.hpp"

namespace snnconv {

void SnnLayerState::init(std::vector<std::size_t> layer_shape, double base) {
    shape = std::move(layer_shape);
    base_threshold = base;
    const std::size_t n = shape_product(shape);
    v_after.assign(n, 0.0L);
    v_before.assign(n, 0.0L);
    v_before_prev.assign(n, 0.0L);
    v_mean.assign(n, 0.0);
    threshold.assign(n, base);
    rate_sum.assign(n, 0.0);
    spike_counts.assign(n, 0);
    fired_now.assign(n, 0);
}

void SnnLayerState::reset() {
    init(shape, base_threshold);
}

}  // namespace snnconv
