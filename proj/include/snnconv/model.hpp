#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "snnconv/tensor.hpp"

namespace snnconv {

enum class LayerKind { Dense, Conv2d, Relu, AvgPool, Flatten };

std::string layer_kind_name(LayerKind k);

struct Layer {
    LayerKind kind = LayerKind::Dense;
    Tensor weights;  // dense: out x in; conv: c_out x c_in x kh x kw
    Tensor bias;     // dense/conv only, length = out
    int stride = 1;
    int padding = 0;
    int window = 1;  // avgpool

    bool parameterized() const { return kind == LayerKind::Dense || kind == LayerKind::Conv2d; }

    static Layer dense(Tensor weights, Tensor bias);
    static Layer conv(Tensor kernels, Tensor bias, int stride, int padding);
    static Layer relu_layer();
    static Layer avgpool(int window);
    static Layer flatten();
};

struct AnnModel {
    std::vector<Layer> layers;
    std::vector<std::size_t> input_shape;

    int num_param_layers() const;

    /// Checks shape compatibility layer by layer and the dense/conv-then-relu
    /// structure the conversion assumes. Throws ConfigError.
    void validate() const;
};

/// One IF stage of the converted network: the ops between two ReLU positions
/// (pool/flatten plus exactly one dense/conv), ReLU excluded. The final block
/// may lack a ReLU (classifier).
struct Block {
    std::vector<int> op_indices;  // indices into model.layers, relu excluded
    int param_index = -1;         // the dense/conv layer inside op_indices
    bool has_relu = false;
};

std::vector<Block> segment_blocks(const AnnModel& model);

/// Applies every op of a block (no ReLU) to the incoming signal.
Tensor apply_block(const AnnModel& model, const Block& block, const Tensor& input);

struct ForwardCapture {
    std::vector<Tensor> pre_relu;   // per block, value entering the ReLU position
    std::vector<Tensor> post_relu;  // relu(pre), also recorded for the final block
};

Tensor forward(const AnnModel& model, const Tensor& input, ForwardCapture* capture = nullptr);

struct LabeledDataset {
    std::vector<Tensor> samples;
    std::vector<int> labels;
    int num_classes = 0;

    std::size_t size() const { return samples.size(); }
};

/// 4-ish Gaussian blobs for desk-scale experiments; deterministic given seed.
LabeledDataset make_blobs(std::size_t n, int num_classes, int dim, std::uint64_t seed,
                          double spread = 0.45);

/// Minimal seeded SGD trainer: dense+relu stack with softmax cross-entropy.
/// widths = {input, hidden..., classes}. epochs=0 returns the seeded init.
AnnModel train_toy_mlp(const LabeledDataset& dataset, const std::vector<int>& widths,
                       int epochs, double lr, std::uint64_t seed,
                       double* train_accuracy = nullptr);

double model_accuracy(const AnnModel& model, const LabeledDataset& dataset);

struct ActivationProfile {
    std::vector<double> max_post_relu;  // per block, the calibrated V_th
    bool has_pre_relu = false;
    // pre_relu_samples[sample][block]
    std::vector<std::vector<Tensor>> pre_relu_samples;
};

ActivationProfile record_profile(const AnnModel& model, const LabeledDataset& calib_set,
                                 bool store_pre_relu);

}  // namespace snnconv
