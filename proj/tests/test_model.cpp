#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "snnconv/errors.hpp"
#include "snnconv/model.hpp"

using namespace snnconv;

namespace {

AnnModel single_dense(std::vector<double> w, std::vector<double> b,
                      std::size_t out, std::size_t in) {
    AnnModel m;
    m.input_shape = {in};
    m.layers.push_back(Layer::dense(Tensor({out, in}, std::move(w)), Tensor({out}, std::move(b))));
    return m;
}

}  // namespace

TEST_CASE("forward captures the pre/post activation pair") {
    AnnModel m = single_dense({0.5, 0.5, -0.5}, {0.0}, 1, 3);
    ForwardCapture cap;
    Tensor out = forward(m, Tensor::from_vector({0.48, 0.5, 1.0}), &cap);
    CHECK(out[0] == doctest::Approx(-0.01).epsilon(1e-12));
    CHECK(cap.pre_relu[0][0] == doctest::Approx(-0.01).epsilon(1e-12));
    CHECK(cap.post_relu[0][0] == 0.0);
}

TEST_CASE("zero input through bias-free model gives zero activations") {
    AnnModel m;
    m.input_shape = {3};
    m.layers.push_back(Layer::dense(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}), Tensor({2}, {0, 0})));
    m.layers.push_back(Layer::relu_layer());
    m.layers.push_back(Layer::dense(Tensor({1, 2}, {1, -1}), Tensor({1}, {0})));
    ForwardCapture cap;
    forward(m, Tensor::from_vector({0, 0, 0}), &cap);
    for (const Tensor& t : cap.pre_relu)
        for (double v : t.data) CHECK(v == 0.0);
}

TEST_CASE("bias passes straight through on zero input") {
    AnnModel m = single_dense({1.0}, {0.42}, 1, 1);
    ForwardCapture cap;
    forward(m, Tensor::from_vector({0.0}), &cap);
    CHECK(cap.post_relu[0][0] == 0.42);
}

TEST_CASE("forward shape mismatch names the problem") {
    AnnModel m = single_dense({1.0}, {0.0}, 1, 1);
    CHECK_THROWS_AS(forward(m, Tensor::from_vector({1.0, 2.0})), DimensionError);
}

TEST_CASE("forward with and without capture agree") {
    LabeledDataset ds = make_blobs(64, 4, 2, 99);
    AnnModel m = train_toy_mlp(ds, {2, 8, 4}, 5, 0.1, 1);
    for (std::size_t i = 0; i < 8; ++i) {
        ForwardCapture cap;
        Tensor a = forward(m, ds.samples[i]);
        Tensor b = forward(m, ds.samples[i], &cap);
        CHECK(a.data == b.data);
    }
}

TEST_CASE("post-relu capture is non-negative everywhere") {
    LabeledDataset ds = make_blobs(32, 4, 2, 7);
    AnnModel m = train_toy_mlp(ds, {2, 8, 4}, 3, 0.1, 2);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        ForwardCapture cap;
        forward(m, ds.samples[i], &cap);
        for (const Tensor& t : cap.post_relu)
            for (double v : t.data) CHECK(v >= 0.0);
    }
}

TEST_CASE("model validation rejects missing relu between dense layers") {
    AnnModel m;
    m.input_shape = {2};
    m.layers.push_back(Layer::dense(Tensor({2, 2}, {1, 0, 0, 1}), Tensor({2}, {0, 0})));
    m.layers.push_back(Layer::dense(Tensor({1, 2}, {1, 1}), Tensor({1}, {0})));
    CHECK_THROWS_AS(m.validate(), ConfigError);
}

TEST_CASE("block segmentation splits at relu positions") {
    AnnModel m;
    m.input_shape = {2};
    m.layers.push_back(Layer::dense(Tensor({3, 2}, std::vector<double>(6, 0.1)), Tensor({3}, {0, 0, 0})));
    m.layers.push_back(Layer::relu_layer());
    m.layers.push_back(Layer::dense(Tensor({1, 3}, {1, 1, 1}), Tensor({1}, {0})));
    auto blocks = segment_blocks(m);
    REQUIRE(blocks.size() == 2);
    CHECK(blocks[0].has_relu);
    CHECK_FALSE(blocks[1].has_relu);
    CHECK(blocks[0].param_index == 0);
    CHECK(blocks[1].param_index == 2);
}

TEST_CASE("trainer beats a logistic-regression baseline on separable blobs") {
    // Two well-separated classes; a linear model reaches >= 0.98 here, so the
    // MLP must as well.
    LabeledDataset ds = make_blobs(400, 2, 2, 21, 0.35);

    // Independent baseline: batch gradient descent on logistic regression.
    double w0 = 0, w1 = 0, b = 0;
    for (int it = 0; it < 3000; ++it) {
        double g0 = 0, g1 = 0, gb = 0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const double z = w0 * ds.samples[i][0] + w1 * ds.samples[i][1] + b;
            const double p = 1.0 / (1.0 + std::exp(-z));
            const double err = p - (ds.labels[i] == 1 ? 1.0 : 0.0);
            g0 += err * ds.samples[i][0];
            g1 += err * ds.samples[i][1];
            gb += err;
        }
        const double lr = 0.5 / static_cast<double>(ds.size());
        w0 -= lr * g0;
        w1 -= lr * g1;
        b -= lr * gb;
    }
    std::size_t base_hits = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double z = w0 * ds.samples[i][0] + w1 * ds.samples[i][1] + b;
        if ((z >= 0 ? 1 : 0) == ds.labels[i]) ++base_hits;
    }
    const double baseline = static_cast<double>(base_hits) / static_cast<double>(ds.size());
    CHECK(baseline >= 0.98);

    double acc = 0;
    train_toy_mlp(ds, {2, 8, 2}, 50, 0.1, 3, &acc);
    CHECK(acc >= 0.98);
}

TEST_CASE("zero epochs returns the seeded init unchanged") {
    LabeledDataset ds = make_blobs(16, 2, 2, 1);
    AnnModel a = train_toy_mlp(ds, {2, 4, 2}, 0, 0.1, 9);
    AnnModel b = train_toy_mlp(ds, {2, 4, 2}, 0, 0.5, 9);  // lr irrelevant at 0 epochs
    CHECK(a.layers[0].weights.data == b.layers[0].weights.data);
    for (double v : a.layers[0].bias.data) CHECK(v == 0.0);
}

TEST_CASE("same seed trains bit-identical weights") {
    LabeledDataset ds = make_blobs(128, 4, 2, 4);
    AnnModel a = train_toy_mlp(ds, {2, 8, 4}, 10, 0.1, 5);
    AnnModel b = train_toy_mlp(ds, {2, 8, 4}, 10, 0.1, 5);
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        CHECK(a.layers[l].weights.data == b.layers[l].weights.data);
        CHECK(a.layers[l].bias.data == b.layers[l].bias.data);
    }
}

TEST_CASE("trainer rejects bad inputs") {
    LabeledDataset empty;
    CHECK_THROWS_AS(train_toy_mlp(empty, {2, 2}, 1, 0.1, 0), InputError);
    LabeledDataset ds = make_blobs(8, 2, 2, 0);
    CHECK_THROWS_AS(train_toy_mlp(ds, {2}, 1, 0.1, 0), InputError);
    CHECK_THROWS_AS(train_toy_mlp(ds, {3, 2}, 1, 0.1, 0), InputError);
}

TEST_CASE("profile records the running maximum") {
    AnnModel m = single_dense({1.0}, {0.0}, 1, 1);
    LabeledDataset ds;
    ds.num_classes = 2;
    ds.samples = {Tensor::from_vector({0.3}), Tensor::from_vector({0.7})};
    ds.labels = {0, 1};
    ActivationProfile p = record_profile(m, ds, false);
    REQUIRE(p.max_post_relu.size() == 1);
    CHECK(p.max_post_relu[0] == 0.7);
}

TEST_CASE("profile max over a single sample") {
    AnnModel m = single_dense({1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, 3, 3);
    LabeledDataset ds;
    ds.num_classes = 2;
    ds.samples = {Tensor::from_vector({0.0, 0.3, 0.42})};
    ds.labels = {0};
    ActivationProfile p = record_profile(m, ds, false);
    CHECK(p.max_post_relu[0] == 0.42);
}

TEST_CASE("all-negative layer calibrates to zero") {
    AnnModel m = single_dense({1.0}, {0.0}, 1, 1);
    LabeledDataset ds;
    ds.num_classes = 2;
    ds.samples = {Tensor::from_vector({-0.5}), Tensor::from_vector({-2.0})};
    ds.labels = {0, 1};
    ActivationProfile p = record_profile(m, ds, false);
    CHECK(p.max_post_relu[0] == 0.0);
}

TEST_CASE("profile is permutation-invariant in sample order") {
    LabeledDataset ds = make_blobs(40, 4, 2, 13);
    AnnModel m = train_toy_mlp(ds, {2, 8, 4}, 5, 0.1, 6);
    ActivationProfile p1 = record_profile(m, ds, false);
    LabeledDataset rev;
    rev.num_classes = ds.num_classes;
    rev.samples.assign(ds.samples.rbegin(), ds.samples.rend());
    rev.labels.assign(ds.labels.rbegin(), ds.labels.rend());
    ActivationProfile p2 = record_profile(m, rev, false);
    CHECK(p1.max_post_relu == p2.max_post_relu);
}

TEST_CASE("stored pre-relu stays under the calibrated maximum after relu") {
    LabeledDataset ds = make_blobs(30, 4, 2, 17);
    AnnModel m = train_toy_mlp(ds, {2, 8, 4}, 5, 0.1, 8);
    ActivationProfile p = record_profile(m, ds, true);
    REQUIRE(p.has_pre_relu);
    REQUIRE(p.pre_relu_samples.size() == ds.size());
    for (const auto& sample : p.pre_relu_samples) {
        for (std::size_t l = 0; l < sample.size(); ++l) {
            for (double v : sample[l].data) CHECK(std::max(v, 0.0) <= p.max_post_relu[l]);
        }
    }
}

TEST_CASE("make_blobs is deterministic and labeled in range") {
    LabeledDataset a = make_blobs(50, 4, 2, 42);
    LabeledDataset b = make_blobs(50, 4, 2, 42);
    CHECK(a.labels == b.labels);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.samples[i].data == b.samples[i].data);
        CHECK(a.labels[i] >= 0);
        CHECK(a.labels[i] < 4);
    }
}
