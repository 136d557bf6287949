#include "snnconv/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "snnconv/errors.hpp"

namespace snnconv {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

std::string layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Dense: return "dense";
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::Relu: return "relu";
        case LayerKind::AvgPool: return "avgpool";
        case LayerKind::Flatten: return "flatten";
    }
    return "?";
}

Layer Layer::dense(Tensor weights, Tensor bias) {
    Layer l;
    l.kind = LayerKind::Dense;
    if (weights.rank() != 2) throw DimensionError("dense weights must be out x in");
    if (bias.size() != weights.shape[0]) throw DimensionError("dense bias length must equal out");
    l.weights = std::move(weights);
    l.bias = std::move(bias);
    return l;
}

Layer Layer::conv(Tensor kernels, Tensor bias, int stride, int padding) {
    Layer l;
    l.kind = LayerKind::Conv2d;
    if (kernels.rank() != 4) throw DimensionError("conv kernels must be c_out x c_in x kh x kw");
    if (bias.size() != kernels.shape[0]) throw DimensionError("conv bias length must equal c_out");
    l.weights = std::move(kernels);
    l.bias = std::move(bias);
    l.stride = stride;
    l.padding = padding;
    return l;
}

Layer Layer::relu_layer() {
    Layer l;
    l.kind = LayerKind::Relu;
    return l;
}

Layer Layer::avgpool(int window) {
    Layer l;
    l.kind = LayerKind::AvgPool;
    l.window = window;
    return l;
}

Layer Layer::flatten() {
    Layer l;
    l.kind = LayerKind::Flatten;
    return l;
}

int AnnModel::num_param_layers() const {
    int n = 0;
    for (const Layer& l : layers) n += l.parameterized() ? 1 : 0;
    return n;
}

namespace {

std::vector<std::size_t> layer_output_shape(const Layer& l, const std::vector<std::size_t>& in,
                                            int index) {
    const std::string where = "layer " + std::to_string(index) + " (" + layer_kind_name(l.kind) + ")";
    switch (l.kind) {
        case LayerKind::Dense:
            if (in.size() != 1 || in[0] != l.weights.shape[1]) {
                throw DimensionError(where + " expects input of size " +
                                     std::to_string(l.weights.shape[1]) + ", got " + shape_string(in));
            }
            return {l.weights.shape[0]};
        case LayerKind::Conv2d: {
            if (in.size() != 3 || in[0] != l.weights.shape[1]) {
                throw DimensionError(where + " expects c_in x h x w input with c_in = " +
                                     std::to_string(l.weights.shape[1]) + ", got " + shape_string(in));
            }
            const long ph = static_cast<long>(in[1]) + 2 * l.padding;
            const long pw = static_cast<long>(in[2]) + 2 * l.padding;
            if (ph < static_cast<long>(l.weights.shape[2]) || pw < static_cast<long>(l.weights.shape[3])) {
                throw DimensionError(where + ": kernel larger than padded input");
            }
            return {l.weights.shape[0],
                    static_cast<std::size_t>((ph - static_cast<long>(l.weights.shape[2])) / l.stride + 1),
                    static_cast<std::size_t>((pw - static_cast<long>(l.weights.shape[3])) / l.stride + 1)};
        }
        case LayerKind::Relu:
            return in;
        case LayerKind::AvgPool: {
            if (in.size() != 3) throw DimensionError(where + " expects c x h x w input");
            const std::size_t uw = static_cast<std::size_t>(l.window);
            if (in[1] % uw != 0 || in[2] % uw != 0) {
                throw DimensionError(where + ": window does not divide " + shape_string(in));
            }
            return {in[0], in[1] / uw, in[2] / uw};
        }
        case LayerKind::Flatten:
            return {shape_product(in)};
    }
    throw DimensionError(where + ": unknown kind");
}

Tensor apply_layer(const Layer& l, const Tensor& x) {
    switch (l.kind) {
        case LayerKind::Dense: {
            Tensor col({x.size(), 1}, x.data);
            Tensor out = matmul(l.weights, col);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += l.bias[i];
            const std::size_t n = out.size();
            return Tensor({n}, std::move(out.data));
        }
        case LayerKind::Conv2d: {
            Tensor out = conv2d(x, l.weights, l.stride, l.padding);
            const std::size_t plane = out.shape[1] * out.shape[2];
            for (std::size_t c = 0; c < out.shape[0]; ++c)
                for (std::size_t i = 0; i < plane; ++i) out.data[c * plane + i] += l.bias[c];
            return out;
        }
        case LayerKind::Relu:
            return relu(x);
        case LayerKind::AvgPool:
            return avgpool2d(x, l.window);
        case LayerKind::Flatten:
            return Tensor({x.size()}, x.data);
    }
    throw DimensionError("unknown layer kind");
}

}  // namespace

void AnnModel::validate() const {
    if (layers.empty()) throw ConfigError("model has no layers");
    if (input_shape.empty()) throw ConfigError("model has no input shape");
    std::vector<std::size_t> shape = input_shape;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        shape = layer_output_shape(layers[i], shape, static_cast<int>(i));
    }
    // Every dense/conv must reach exactly one relu (pool/flatten may
    // intervene) before the next dense/conv; the final one may not.
    int pending_param = -1;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        if (l.parameterized()) {
            if (pending_param >= 0) {
                throw ConfigError("layer " + std::to_string(pending_param) +
                                  " is not followed by a relu before layer " + std::to_string(i));
            }
            pending_param = static_cast<int>(i);
        } else if (l.kind == LayerKind::Relu) {
            if (pending_param < 0) {
                throw ConfigError("relu at layer " + std::to_string(i) +
                                  " has no preceding dense/conv layer");
            }
            pending_param = -1;
        }
    }
}

std::vector<Block> segment_blocks(const AnnModel& model) {
    model.validate();
    std::vector<Block> blocks;
    Block cur;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const Layer& l = model.layers[i];
        if (l.kind == LayerKind::Relu) {
            cur.has_relu = true;
            blocks.push_back(cur);
            cur = Block{};
            continue;
        }
        if (l.parameterized()) cur.param_index = static_cast<int>(i);
        cur.op_indices.push_back(static_cast<int>(i));
    }
    if (!cur.op_indices.empty()) {
        if (cur.param_index < 0) {
            throw ConfigError("trailing pool/flatten layers after the last dense/conv are unsupported");
        }
        blocks.push_back(cur);
    }
    return blocks;
}

Tensor apply_block(const AnnModel& model, const Block& block, const Tensor& input) {
    Tensor x = input;
    for (int idx : block.op_indices) x = apply_layer(model.layers[idx], x);
    return x;
}

Tensor forward(const AnnModel& model, const Tensor& input, ForwardCapture* capture) {
    if (input.shape != model.input_shape) {
        throw DimensionError("input shape " + shape_string(input.shape) +
                             " does not match model input " + shape_string(model.input_shape));
    }
    const std::vector<Block> blocks = segment_blocks(model);
    Tensor x = input;
    for (const Block& b : blocks) {
        x = apply_block(model, b, x);
        if (capture) {
            capture->pre_relu.push_back(x);
            capture->post_relu.push_back(relu(x));
        }
        if (b.has_relu) x = relu(x);
    }
    return x;
}

LabeledDataset make_blobs(std::size_t n, int num_classes, int dim, std::uint64_t seed,
                          double spread) {
    if (n == 0 || num_classes < 2 || dim < 1) throw InputError("make_blobs: bad arguments");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spread);
    // class centers on a circle in the first two dims, alternating sign beyond
    std::vector<std::vector<double>> centers(static_cast<std::size_t>(num_classes),
                                             std::vector<double>(static_cast<std::size_t>(dim), 0.0));
    const double pi = 3.14159265358979323846;
    for (int c = 0; c < num_classes; ++c) {
        const double ang = 2.0 * pi * c / num_classes;
        centers[c][0] = 2.0 * std::cos(ang);
        if (dim > 1) centers[c][1] = 2.0 * std::sin(ang);
        for (int d = 2; d < dim; ++d) centers[c][d] = (c % 2 == 0 ? 0.5 : -0.5);
    }
    LabeledDataset ds;
    ds.num_classes = num_classes;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % static_cast<std::size_t>(num_classes));
        std::vector<double> v(static_cast<std::size_t>(dim));
        for (int d = 0; d < dim; ++d) v[static_cast<std::size_t>(d)] = centers[label][d] + noise(rng);
        ds.samples.push_back(Tensor::from_vector(std::move(v)));
        ds.labels.push_back(label);
    }
    return ds;
}

namespace {

struct MlpParams {
    std::vector<RowMat> w;
    std::vector<Vec> b;
};

MlpParams init_mlp(const std::vector<int>& widths, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    MlpParams p;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const int fan_in = widths[i];
        const int fan_out = widths[i + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        RowMat w(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = u(rng);
        p.w.push_back(std::move(w));
        p.b.push_back(Vec::Zero(fan_out));
    }
    return p;
}

AnnModel params_to_model(const MlpParams& p, int input_dim) {
    AnnModel m;
    m.input_shape = {static_cast<std::size_t>(input_dim)};
    for (std::size_t i = 0; i < p.w.size(); ++i) {
        const RowMat& w = p.w[i];
        Tensor wt = Tensor::zeros({static_cast<std::size_t>(w.rows()), static_cast<std::size_t>(w.cols())});
        for (int r = 0; r < w.rows(); ++r)
            for (int c = 0; c < w.cols(); ++c) wt.at2(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = w(r, c);
        Tensor bt = Tensor::zeros({static_cast<std::size_t>(p.b[i].size())});
        for (int r = 0; r < p.b[i].size(); ++r) bt[static_cast<std::size_t>(r)] = p.b[i](r);
        m.layers.push_back(Layer::dense(std::move(wt), std::move(bt)));
        if (i + 1 < p.w.size()) m.layers.push_back(Layer::relu_layer());
    }
    m.validate();
    return m;
}

}  // namespace

AnnModel train_toy_mlp(const LabeledDataset& dataset, const std::vector<int>& widths,
                       int epochs, double lr, std::uint64_t seed, double* train_accuracy) {
    if (dataset.size() == 0) throw InputError("train_toy_mlp: empty dataset");
    if (widths.size() < 2) throw InputError("train_toy_mlp: need at least input and output widths");
    for (int w : widths)
        if (w < 1) throw InputError("train_toy_mlp: widths must be >= 1");
    if (static_cast<std::size_t>(widths.front()) != shape_product(dataset.samples[0].shape)) {
        throw InputError("train_toy_mlp: first width must match feature count");
    }

    MlpParams p = init_mlp(widths, seed);
    const std::size_t n = dataset.size();
    const std::size_t nl = p.w.size();
    const int batch = 32;
    std::mt19937_64 shuffle_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(n, start + batch);
            std::vector<RowMat> gw(nl);
            std::vector<Vec> gb(nl);
            for (std::size_t i = 0; i < nl; ++i) {
                gw[i] = RowMat::Zero(p.w[i].rows(), p.w[i].cols());
                gb[i] = Vec::Zero(p.b[i].size());
            }
            for (std::size_t s = start; s < end; ++s) {
                const Tensor& xt = dataset.samples[order[s]];
                Vec x = Eigen::Map<const Vec>(xt.data.data(), static_cast<Eigen::Index>(xt.size()));
                std::vector<Vec> acts{x};   // post-activation per stage
                std::vector<Vec> pre(nl);
                for (std::size_t i = 0; i < nl; ++i) {
                    pre[i] = p.w[i] * acts.back() + p.b[i];
                    acts.push_back(i + 1 < nl ? pre[i].cwiseMax(0.0) : pre[i]);
                }
                // softmax cross-entropy gradient
                Vec logits = acts.back();
                const double mx = logits.maxCoeff();
                Vec ex = (logits.array() - mx).exp();
                Vec prob = ex / ex.sum();
                Vec delta = prob;
                delta(dataset.labels[order[s]]) -= 1.0;
                for (std::size_t i = nl; i-- > 0;) {
                    gw[i] += delta * acts[i].transpose();
                    gb[i] += delta;
                    if (i > 0) {
                        Vec back = p.w[i].transpose() * delta;
                        delta = (pre[i - 1].array() > 0.0).select(back, Vec::Zero(back.size()));
                    }
                }
            }
            const double scale = lr / static_cast<double>(end - start);
            for (std::size_t i = 0; i < nl; ++i) {
                p.w[i] -= scale * gw[i];
                p.b[i] -= scale * gb[i];
            }
        }
    }

    AnnModel model = params_to_model(p, widths.front());
    if (train_accuracy) *train_accuracy = model_accuracy(model, dataset);
    return model;
}

double model_accuracy(const AnnModel& model, const LabeledDataset& dataset) {
    if (dataset.size() == 0) throw InputError("model_accuracy: empty dataset");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        Tensor out = forward(model, dataset.samples[i]);
        const auto arg = std::max_element(out.data.begin(), out.data.end());
        if (static_cast<int>(arg - out.data.begin()) == dataset.labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

ActivationProfile record_profile(const AnnModel& model, const LabeledDataset& calib_set,
                                 bool store_pre_relu) {
    if (calib_set.size() == 0) throw InputError("record_profile: empty calibration set");
    const std::size_t nblocks = segment_blocks(model).size();
    ActivationProfile profile;
    profile.max_post_relu.assign(nblocks, 0.0);
    profile.has_pre_relu = store_pre_relu;
    for (std::size_t s = 0; s < calib_set.size(); ++s) {
        ForwardCapture cap;
        forward(model, calib_set.samples[s], &cap);
        for (std::size_t l = 0; l < nblocks; ++l) {
            for (double v : cap.post_relu[l].data) {
                profile.max_post_relu[l] = std::max(profile.max_post_relu[l], v);
            }
        }
        if (store_pre_relu) profile.pre_relu_samples.push_back(std::move(cap.pre_relu));
    }
    return profile;
}

}  // namespace snnconv
