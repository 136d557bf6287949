#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "snnconv/errors.hpp"
#include "snnconv/snn.hpp"

using namespace snnconv;

namespace {

/// One neuron, identity weight, no bias: the constant-input reference cell.
AnnModel one_neuron() {
    AnnModel m;
    m.input_shape = {1};
    m.layers.push_back(Layer::dense(Tensor({1, 1}, {1.0}), Tensor({1}, {0.0})));
    return m;
}

ActivationProfile profile_with(std::vector<double> maxima) {
    ActivationProfile p;
    p.max_post_relu = std::move(maxima);
    return p;
}

SnnNetwork constant_net(const AnnModel& m, std::vector<double> maxima) {
    MsatConfig cfg;
    cfg.regime = Regime::Constant;
    return convert(m, profile_with(std::move(maxima)), Regime::Constant, cfg);
}

AnnModel random_mlp(int in, int hidden, int out, std::uint64_t seed, bool bias = true) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    AnnModel m;
    m.input_shape = {static_cast<std::size_t>(in)};
    Tensor w1 = Tensor::zeros({static_cast<std::size_t>(hidden), static_cast<std::size_t>(in)});
    for (auto& v : w1.data) v = u(rng);
    Tensor b1 = Tensor::zeros({static_cast<std::size_t>(hidden)});
    if (bias)
        for (auto& v : b1.data) v = 0.2 * u(rng);
    m.layers.push_back(Layer::dense(std::move(w1), std::move(b1)));
    m.layers.push_back(Layer::relu_layer());
    Tensor w2 = Tensor::zeros({static_cast<std::size_t>(out), static_cast<std::size_t>(hidden)});
    for (auto& v : w2.data) v = u(rng);
    Tensor b2 = Tensor::zeros({static_cast<std::size_t>(out)});
    if (bias)
        for (auto& v : b2.data) v = 0.2 * u(rng);
    m.layers.push_back(Layer::dense(std::move(w2), std::move(b2)));
    return m;
}

}  // namespace

TEST_CASE("conversion copies thresholds from the profile maxima") {
    AnnModel m = one_neuron();
    SnnNetwork net = constant_net(m, {0.7});
    REQUIRE(net.layers.size() == 1);
    CHECK(net.layers[0].base_threshold == 0.7);
    CHECK(net.layers[0].threshold[0] == 0.7);
    for (long double v : net.layers[0].v_after) CHECK(v == 0.0L);
}

TEST_CASE("conversion rejects a dead layer") {
    AnnModel m = one_neuron();
    MsatConfig cfg;
    CHECK_THROWS_WITH_AS(convert(m, profile_with({0.0}), Regime::Constant, cfg),
                         doctest::Contains("dead layer"), ConfigError);
}

TEST_CASE("conversion rejects a profile of the wrong arity") {
    AnnModel m = one_neuron();
    MsatConfig cfg;
    CHECK_THROWS_AS(convert(m, profile_with({1.0, 1.0}), Regime::Constant, cfg), ConfigError);
}

TEST_CASE("conversion is deterministic") {
    AnnModel m = random_mlp(2, 4, 2, 77);
    SnnNetwork a = constant_net(m, {1.0, 2.0});
    SnnNetwork b = constant_net(m, {1.0, 2.0});
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        CHECK(a.layers[l].threshold == b.layers[l].threshold);
        CHECK(a.layers[l].base_threshold == b.layers[l].base_threshold);
    }
}

TEST_CASE("sub-threshold drive over ten steps yields four spikes and residual 0.2") {
    AnnModel m = one_neuron();
    SnnNetwork net = constant_net(m, {1.0});
    RunResult res = run(net, Tensor::from_vector({0.42}), 10);
    CHECK(net.layers[0].spike_counts[0] == 4);
    CHECK(static_cast<double>(net.layers[0].v_after[0]) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(res.rates[0][0] == 0.4);
}

TEST_CASE("zero input and zero bias never spike") {
    AnnModel m = one_neuron();
    SnnNetwork net = constant_net(m, {1.0});
    run(net, Tensor::from_vector({0.0}), 32);
    CHECK(net.layers[0].spike_counts[0] == 0);
    CHECK(net.layers[0].v_after[0] == 0.0L);
}

TEST_CASE("input equal to the threshold fires every step with zero residual") {
    AnnModel m = one_neuron();
    SnnNetwork net = constant_net(m, {1.0});
    RunResult res = run(net, Tensor::from_vector({1.0}), 8);
    CHECK(net.layers[0].spike_counts[0] == 8);
    CHECK(net.layers[0].v_after[0] == 0.0L);
    CHECK(res.rates[0][0] == 1.0);
}

TEST_CASE("a spike fires at exactly zero margin") {
    // potential hits the threshold exactly at the first step
    AnnModel m = one_neuron();
    SnnNetwork net = constant_net(m, {0.5});
    step(net, Tensor::from_vector({0.5}));
    CHECK(net.layers[0].fired_now[0] == 1);
}

TEST_CASE("stepping past the horizon is a state error") {
    AnnModel m = one_neuron();
    SnnNetwork net = constant_net(m, {1.0});
    net.T = 2;
    Tensor x = Tensor::from_vector({0.1});
    step(net, x);
    step(net, x);
    CHECK_THROWS_AS(step(net, x), StateError);
}

TEST_CASE("run rejects non-positive horizons") {
    AnnModel m = one_neuron();
    SnnNetwork net = constant_net(m, {1.0});
    CHECK_THROWS_AS(run(net, Tensor::from_vector({0.1}), 0), ConfigError);
}

TEST_CASE("reset restores the initial state exactly") {
    AnnModel m = random_mlp(3, 5, 2, 9);
    SnnNetwork net = constant_net(m, {1.3, 0.8});
    run(net, Tensor::from_vector({0.4, -0.2, 0.9}), 16);
    net.reset();
    for (const SnnLayerState& s : net.layers) {
        for (long double v : s.v_after) CHECK(v == 0.0L);
        for (long double v : s.v_before) CHECK(v == 0.0L);
        for (double v : s.v_mean) CHECK(v == 0.0);
        for (long long c : s.spike_counts) CHECK(c == 0);
        for (double th : s.threshold) CHECK(th == s.base_threshold);
        for (double r : s.rate_sum) CHECK(r == 0.0);
    }
    CHECK(net.t == 0);
}

TEST_CASE("closed-form rate evaluations") {
    CHECK(clipfloor_oracle(0.42, 10, 1.0) == 0.4);
    CHECK(clipfloor_oracle(-0.5, 10, 1.0) == 0.0);
    CHECK(clipfloor_oracle(2.0, 10, 1.0) == 1.0);
    CHECK(clipfloor_oracle(4.0, 7, 2.0) == 2.0);
}

TEST_CASE("constant-input neuron matches the closed form on a spot grid") {
    // the full ~39k-point grid runs in the acceptance binary; a coarse slice here
    AnnModel m = one_neuron();
    for (double vth : {0.5, 1.0, 2.0}) {
        SnnNetwork net = constant_net(m, {vth});
        for (int T : {1, 2, 3, 7, 10, 16, 33, 64}) {
            for (double a = -1.0; a <= 2.0; a += 0.13) {
                RunResult res = run(net, Tensor::from_vector({a}), T);
                CHECK(res.rates[0][0] == clipfloor_oracle(a, T, vth));
            }
        }
    }
}

TEST_CASE("soft reset telescopes: residual = input sum - emitted sum") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-0.5, 1.5);
    AnnModel m = one_neuron();
    for (int rep = 0; rep < 50; ++rep) {
        SnnNetwork net = constant_net(m, {1.0});
        const int T = 1 + static_cast<int>(rng() % 32);
        double in_sum = 0.0;
        for (int t = 0; t < T; ++t) {
            const double a = u(rng);
            step(net, Tensor::from_vector({a}));
            in_sum += a;
        }
        const double emitted = net.layers[0].rate_sum[0];
        CHECK(std::abs(static_cast<double>(net.layers[0].v_after[0]) - (in_sum - emitted)) <
              1e-9);
    }
}

TEST_CASE("layer recursion under constant thresholds") {
    // r2 = W2 * r1 + b2 - V2(T)/T, exact up to 1e-9, for random two-layer nets
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 20; ++rep) {
        AnnModel m = random_mlp(2, 4, 3, 1000 + rep);
        ActivationProfile p;
        p.max_post_relu = {1.0, 1.0};
        MsatConfig cfg;
        SnnNetwork net = convert(m, p, Regime::Constant, cfg);
        std::uniform_real_distribution<double> u(-1, 1);
        Tensor x = Tensor::from_vector({u(rng), u(rng)});
        const int T = 1 + static_cast<int>(rng() % 32);
        RunResult res = run(net, x, T);
        const Layer& l2 = m.layers[2];
        for (std::size_t i = 0; i < 3; ++i) {
            double expect = l2.bias[i];
            for (std::size_t j = 0; j < 4; ++j) expect += l2.weights.at2(i, j) * res.rates[0][j];
            expect -= static_cast<double>(net.layers[1].v_after[i]) / T;
            CHECK(std::abs(res.rates[1][i] - expect) < 1e-9);
        }
    }
}

TEST_CASE("longer horizons track the source activations more closely") {
    AnnModel m = random_mlp(2, 6, 3, 4242);
    LabeledDataset ds = make_blobs(20, 3, 2, 8);
    ActivationProfile p = record_profile(m, ds, false);
    for (double& v : p.max_post_relu) v = std::max(v, 1e-3);
    MsatConfig cfg;
    SnnNetwork net = convert(m, p, Regime::Constant, cfg);
    double err16 = 0, err256 = 0;
    for (std::size_t s = 0; s < ds.size(); ++s) {
        ForwardCapture cap;
        forward(m, ds.samples[s], &cap);
        RunResult r16 = run(net, ds.samples[s], 16);
        RunResult r256 = run(net, ds.samples[s], 256);
        for (std::size_t i = 0; i < r16.rates[0].size(); ++i) {
            err16 += std::abs(r16.rates[0][i] - cap.post_relu[0][i]);
            err256 += std::abs(r256.rates[0][i] - cap.post_relu[0][i]);
        }
    }
    CHECK(err256 <= err16);
}

TEST_CASE("spike gate consumes randomness only on live sub-unit draws") {
    std::mt19937_64 a(5), b(5);
    CHECK_FALSE(apply_confidence(false, 0.5, a));
    CHECK(a() == b());  // no draw happened
    std::mt19937_64 c(5), d(5);
    CHECK(apply_confidence(true, 1.0, c));
    CHECK(c() == d());  // p = 1 consumes nothing
}

TEST_CASE("spike gate passes about p of live spikes") {
    std::mt19937_64 rng(123);
    int passed = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) passed += apply_confidence(true, 0.5, rng) ? 1 : 0;
    const double frac = static_cast<double>(passed) / n;
    CHECK(std::abs(frac - 0.5) < 0.01);
}

TEST_CASE("unit-probability gate leaves traces bit-identical") {
    AnnModel m = random_mlp(2, 5, 2, 314, /*bias=*/true);
    ActivationProfile p;
    p.max_post_relu = {1.0, 1.0};
    MsatConfig cfg;
    SnnNetwork plain = convert(m, p, Regime::Constant, cfg);
    SnnNetwork gated = convert(m, p, Regime::Constant, cfg);
    gated.confidence_enabled = true;
    gated.confidence.p = {1.0, 1.0};
    gated.confidence.early_steps = 16;
    Tensor x = Tensor::from_vector({0.3, -0.8});
    RunResult ra = run(plain, x, 32, {true});
    RunResult rb = run(gated, x, 32, {true});
    CHECK(ra.rates == rb.rates);
    CHECK(ra.raster.fired == rb.raster.fired);
}

TEST_CASE("gate vetoes skip the reset so the potential persists") {
    AnnModel m = one_neuron();
    SnnNetwork net = constant_net(m, {1.0});
    net.confidence_enabled = true;
    net.confidence.p = {0.0};  // suppress every early spike
    net.confidence.early_steps = 4;
    Tensor x = Tensor::from_vector({1.0});
    for (int t = 0; t < 4; ++t) step(net, x);
    // four charge quanta retained, none emitted
    CHECK(net.layers[0].spike_counts[0] == 0);
    CHECK(static_cast<double>(net.layers[0].v_after[0]) == doctest::Approx(4.0).epsilon(1e-12));
    // past the horizon the filter is inert and the neuron fires again
    step(net, x);
    CHECK(net.layers[0].fired_now[0] == 1);
}

TEST_CASE("gate is inert from the horizon onward") {
    AnnModel m = one_neuron();
    SnnNetwork a = constant_net(m, {1.0});
    SnnNetwork b = constant_net(m, {1.0});
    b.confidence_enabled = true;
    b.confidence.p = {0.0};
    b.confidence.early_steps = 0;  // never active
    RunResult ra = run(a, Tensor::from_vector({0.7}), 16, {true});
    RunResult rb = run(b, Tensor::from_vector({0.7}), 16, {true});
    CHECK(ra.raster.fired == rb.raster.fired);
}

TEST_CASE("potential readout scores match final potentials over T") {
    AnnModel m = random_mlp(2, 4, 3, 2718);
    ActivationProfile p;
    p.max_post_relu = {1.0, 1.0};
    MsatConfig cfg;
    SnnNetwork net = convert(m, p, Regime::Constant, cfg);
    net.potential_readout = true;
    Tensor x = Tensor::from_vector({0.5, 0.25});
    const int T = 12;
    RunResult res = run(net, x, T);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(res.output_scores[i] ==
              doctest::Approx(static_cast<double>(net.layers[1].v_after[i]) / T).epsilon(1e-12));
    }
    // the output layer never fires in this mode
    CHECK(net.layers[1].spike_counts == std::vector<long long>{0, 0, 0});
}

TEST_CASE("adaptive thresholds stay within (0, base] during a run") {
    AnnModel m = random_mlp(2, 6, 3, 555);
    ActivationProfile p;
    p.max_post_relu = {1.2, 0.9};
    for (Regime r : {Regime::Dtt, Regime::Det, Regime::Msat}) {
        MsatConfig cfg;
        cfg.regime = r;
        SnnNetwork net = convert(m, p, r, cfg);
        Tensor x = Tensor::from_vector({0.8, -0.3});
        for (int t = 0; t < 24; ++t) {
            step(net, x);
            for (std::size_t l = 0; l < net.layers.size(); ++l) {
                for (double th : net.layers[l].threshold) {
                    CHECK(th > 0.0);
                    CHECK(th <= net.layers[l].base_threshold);
                }
            }
        }
    }
}
