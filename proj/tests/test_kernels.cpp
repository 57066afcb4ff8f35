#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msse/conv.hpp"
#include "msse/layers.hpp"

#include "support/fd_check.hpp"
#include "support/grad_suite.hpp"
#include "support/oracles.hpp"

using namespace msse;

TEST_CASE("1x1 identity conv passes input through") {
    ParamStore<double> store;
    ConvSpec spec{1, 1, 1, 1, 1, 1, true};
    auto &w = store.add("w", spec.kernel_dims());
    auto &b = store.add("b", {1});
    w.value[0] = 1.0;
    b.value[0] = 0.0;
    Rng rng(5);
    Tensor4<double> x(2, 1, 4, 4);
    fd::fill_uniform(x, rng);
    auto y = conv2d_forward(x, spec, w, &b);
    CHECK(y.data == x.data);

    // identity adjoint: dx == dy
    ConvTape<double> tape;
    conv2d_forward(x, spec, w, &b, &tape);
    Tensor4<double> dy(2, 1, 4, 4);
    fd::fill_uniform(dy, rng);
    CHECK(conv2d_backward(dy, tape).data == dy.data);
}

TEST_CASE("zero kernel leaves only the bias") {
    ConvSpec spec{3, 2, 3, 3, 1, 1, true};
    ParamStore<double> store;
    auto &w = store.add("w", spec.kernel_dims());
    auto &b = store.add("b", {2});
    b.value = {0.5, -1.25};
    Rng rng(6);
    Tensor4<double> x(1, 3, 5, 5);
    fd::fill_uniform(x, rng);
    auto y = conv2d_forward(x, spec, w, &b);
    for (int oc = 0; oc < 2; ++oc)
        for (int i = 0; i < 25; ++i) CHECK(y.plane(0, oc)[i] == b.value[oc]);
}

TEST_CASE("3x3 depthwise matches direct summation on a ramp") {
    ConvSpec spec{1, 1, 3, 3, 1, 1, true};
    ParamStore<double> store;
    auto &w = store.add("w", spec.kernel_dims());
    auto &b = store.add("b", {1});
    w.value = {1, 0, -1, 2, 0, -2, 1, 0, -1};
    b.value = {0.0};
    Tensor4<double> x(1, 1, 3, 3);
    for (int i = 0; i < 9; ++i) x.data[i] = i; // 0..8 ramp
    auto y = conv2d_forward(x, spec, w, &b);
    auto ref = oracle::naive_conv2d(x, spec, w.value, b.value);
    CHECK(y.data == ref.data);
    // center output: full window, horizontal Sobel of the ramp
    CHECK(y.at(0, 0, 1, 1) == -8.0);
}

TEST_CASE("conv equals the naive oracle bit-for-bit at 64-bit") {
    Rng rng(42);
    for (int trial = 0; trial < 25; ++trial) {
        const int groups = 1 + static_cast<int>(rng.below(3));
        ConvSpec spec;
        spec.groups = groups;
        spec.in_channels = groups * (1 + static_cast<int>(rng.below(3)));
        spec.out_channels = groups * (1 + static_cast<int>(rng.below(3)));
        spec.kernel_h = 1 + 2 * static_cast<int>(rng.below(3));
        spec.kernel_w = 1 + 2 * static_cast<int>(rng.below(3));
        spec.stride = 1 + static_cast<int>(rng.below(2));
        spec.use_bias = true;
        ParamStore<double> store;
        auto &w = store.add("w", spec.kernel_dims());
        auto &b = store.add("b", {spec.out_channels});
        fd::fill_uniform(w.value, rng);
        fd::fill_uniform(b.value, rng);
        Tensor4<double> x(1 + static_cast<int>(rng.below(2)), spec.in_channels,
                          2 + static_cast<int>(rng.below(7)), 2 + static_cast<int>(rng.below(7)));
        fd::fill_uniform(x, rng);
        auto y = conv2d_forward(x, spec, w, &b);
        auto ref = oracle::naive_conv2d(x, spec, w.value, b.value);
        REQUIRE(y.data == ref.data);
    }
}

TEST_CASE("depthwise output channels are independent") {
    ConvSpec spec{4, 4, 3, 3, 4, 1, true};
    ParamStore<double> store;
    auto &w = store.add("w", spec.kernel_dims());
    auto &b = store.add("b", {4});
    Rng rng(9);
    fd::fill_uniform(w.value, rng);
    fd::fill_uniform(b.value, rng);
    Tensor4<double> x(1, 4, 5, 5);
    fd::fill_uniform(x, rng);
    auto y = conv2d_forward(x, spec, w, &b);

    Tensor4<double> x2 = x;
    for (int i = 0; i < 25; ++i) x2.plane(0, 2)[i] += 10.0; // perturb channel 2 only
    auto y2 = conv2d_forward(x2, spec, w, &b);
    for (int ch = 0; ch < 4; ++ch) {
        const bool same =
            std::equal(y.plane(0, ch), y.plane(0, ch) + 25, y2.plane(0, ch));
        CHECK(same == (ch != 2));
    }
}

TEST_CASE("conv errors") {
    ConvSpec spec{3, 2, 3, 3, 1, 1, true};
    ParamStore<double> store;
    auto &w = store.add("w", spec.kernel_dims());
    auto &b = store.add("b", {2});
    Tensor4<double> wrong(1, 4, 5, 5);
    CHECK_THROWS_AS(conv2d_forward(wrong, spec, w, &b), std::invalid_argument);

    ConvSpec bad{3, 2, 3, 3, 2, 1, true};
    Tensor4<double> x(1, 3, 5, 5);
    CHECK_THROWS_AS(conv2d_forward(x, bad, w, &b), std::invalid_argument);

    ConvTape<double> tape;
    conv2d_forward(x, spec, w, &b, &tape);
    Tensor4<double> bad_dy(1, 2, 4, 4);
    CHECK_THROWS_AS(conv2d_backward(bad_dy, tape), std::invalid_argument);
}

TEST_CASE("zero upstream gradient yields zero everywhere") {
    ConvSpec spec{2, 3, 3, 3, 1, 1, true};
    ParamStore<double> store;
    auto &w = store.add("w", spec.kernel_dims());
    auto &b = store.add("b", {3});
    Rng rng(12);
    fd::fill_uniform(w.value, rng);
    Tensor4<double> x(1, 2, 4, 4);
    fd::fill_uniform(x, rng);
    ConvTape<double> tape;
    conv2d_forward(x, spec, w, &b, &tape);
    Tensor4<double> dy(1, 3, 4, 4, 0.0);
    auto dx = conv2d_backward(dy, tape);
    for (double v : dx.data) CHECK(v == 0.0);
    for (double v : w.grad) CHECK(v == 0.0);
    for (double v : b.grad) CHECK(v == 0.0);
}

TEST_CASE("activation values") {
    Tensor4<double> x(1, 1, 1, 4);
    x.data = {-2.0, -0.5, 0.0, 1.5};
    auto y = relu_forward(x);
    CHECK(y.data == std::vector<double>{0.0, 0.0, 0.0, 1.5});

    Tensor4<double> zero(1, 1, 1, 1, 0.0);
    CHECK(sigmoid_forward(zero).data[0] == 0.5);

    // sigmoid'(0) = 0.25
    EwTape<Tensor4<double>> tape;
    sigmoid_forward(zero, &tape);
    Tensor4<double> one(1, 1, 1, 1, 1.0);
    CHECK(sigmoid_backward(one, tape).data[0] == doctest::Approx(0.25));
}

TEST_CASE("global average pooling") {
    Tensor4<double> c(2, 3, 4, 4, 7.25);
    auto v = global_avg_pool_forward(c);
    for (double e : v.data) CHECK(e == 7.25);

    Tensor4<double> x(1, 1, 2, 2);
    x.data = {1, 2, 3, 4};
    CHECK(global_avg_pool_forward(x).data[0] == 2.5);

    Tensor4<double> big(1, 256, 7, 7, 1.0);
    auto pooled = global_avg_pool_forward(big);
    CHECK(pooled.rows == 1);
    CHECK(pooled.cols == 256);
}

TEST_CASE("pooling values and errors") {
    Tensor4<double> x(1, 1, 2, 2);
    x.data = {1, 2, 3, 4};
    CHECK(avg_pool2d_forward(x, 2, 2).data[0] == 2.5);

    Tensor4<double> constant(1, 2, 6, 6, 3.0);
    for (double v : avg_pool2d_forward(constant, 2, 2).data) CHECK(v == 3.0);
    for (double v : max_pool2d_forward(constant, 3, 2).data) CHECK(v == 3.0);

    Tensor4<double> odd(1, 1, 5, 5);
    CHECK_THROWS_AS(avg_pool2d_forward(odd, 2, 2), std::invalid_argument);

    // distinct values: all gradient lands on the argmax cell
    Tensor4<double> w(1, 1, 2, 2);
    w.data = {1, 9, 4, 2};
    MaxPoolTape tape;
    auto y = max_pool2d_forward(w, 2, 2, &tape);
    CHECK(y.data[0] == 9.0);
    Tensor4<double> dy(1, 1, 1, 1, 5.0);
    auto dx = max_pool2d_backward(dy, tape);
    CHECK(dx.data == std::vector<double>{0, 5, 0, 0});
}

TEST_CASE("dense layer identity and zero input") {
    ParamStore<double> store;
    auto &w = store.add("w", {3, 3});
    auto &b = store.add("b", {3});
    for (int i = 0; i < 3; ++i) w.value[static_cast<std::size_t>(i) * 3 + i] = 1.0;
    Rng rng(3);
    Tensor2<double> v(2, 3);
    fd::fill_uniform(v, rng);
    CHECK(dense_forward(v, w, &b).data == v.data);

    b.value = {1.0, -2.0, 0.25};
    Tensor2<double> zero(2, 3, 0.0);
    auto y = dense_forward(zero, w, &b);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) CHECK(y.at(r, c) == b.value[static_cast<std::size_t>(c)]);

    Tensor2<double> bad(2, 4);
    CHECK_THROWS_AS(dense_forward(bad, w, &b), std::invalid_argument);
}

TEST_CASE("dropout contract") {
    Rng rng(77);
    Tensor4<double> x(2, 3, 5, 5);
    fd::fill_uniform(x, rng);

    Rng d1(1);
    CHECK(dropout_forward(x, 0.0, true, d1).data == x.data);
    Rng d2(2);
    CHECK(dropout_forward(x, 0.9, false, d2).data == x.data);
    Rng d3(3);
    CHECK_THROWS_AS(dropout_forward(x, 1.0, true, d3), std::invalid_argument);
    CHECK_THROWS_AS(dropout_forward(x, -0.1, true, d3), std::invalid_argument);

    // inverted scaling keeps the mean at one (law of large numbers)
    Tensor4<double> ones(1, 100, 100, 100, 1.0);
    Rng d4(42);
    auto y = dropout_forward(ones, 0.3, true, d4);
    double mean = 0.0;
    for (double v : y.data) mean += v;
    mean /= static_cast<double>(y.size());
    CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("softmax cross-entropy values") {
    Tensor2<double> uniform(2, 9, 0.0);
    std::vector<int> labels = {3, 7};
    auto res = softmax_xent_forward(uniform, labels);
    CHECK(res.loss == doctest::Approx(std::log(9.0)).epsilon(1e-12));
    for (double p : res.probs.data) CHECK(p == doctest::Approx(1.0 / 9.0));

    Tensor2<double> dominant(1, 4, 0.0);
    dominant.at(0, 2) = 50.0;
    auto res2 = softmax_xent_forward(dominant, {2});
    CHECK(res2.loss < 1e-12);

    CHECK_THROWS_AS(softmax_xent_forward(uniform, {3, 9}), std::invalid_argument);
    CHECK_THROWS_AS(softmax_xent_forward(uniform, {-1, 0}), std::invalid_argument);
}

TEST_CASE("softmax rows sum to one and stay in (0,1)") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor2<double> logits(3, 2 + static_cast<int>(rng.below(8)));
        fd::fill_uniform(logits, rng, -30.0, 30.0);
        std::vector<int> labels(3, 0);
        auto res = softmax_xent_forward(logits, labels);
        for (int r = 0; r < 3; ++r) {
            double sum = 0.0;
            for (int c = 0; c < logits.cols; ++c) {
                const double p = res.probs.at(r, c);
                CHECK(p > 0.0);
                CHECK(p < 1.0);
                sum += p;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("gradient spot-checks per layer") {
    for (const auto &[name, fn] : gradsuite::all_cases()) {
        CAPTURE(name);
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            const double err = fn(seed * 1000 + 17);
            CAPTURE(seed);
            CHECK(err < 1e-4);
        }
    }
}
