#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msse/backbone.hpp"

#include "support/fd_check.hpp"
#include "support/oracles.hpp"

using namespace msse;

namespace {

MiniDenseNetConfig tiny_config() {
    MiniDenseNetConfig cfg;
    cfg.input_size = 16;
    cfg.stem_channels = 4;
    cfg.blocks = {{2, 3}, {2, 3}};
    cfg.compression = 0.5;
    return cfg;
}

} // namespace

TEST_CASE("empty dense block is the identity") {
    Tensor4<double> x(1, 5, 4, 4);
    Rng rng(2);
    fd::fill_uniform(x, rng);
    auto y = dense_block_apply<double>(x, {}, {}, {});
    CHECK(y.data == x.data);
}

TEST_CASE("dense block channel growth follows C_in + L*g") {
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const int c_in = 1 + static_cast<int>(rng.below(8));
        const int layers = 1 + static_cast<int>(rng.below(4));
        const int growth = 1 + static_cast<int>(rng.below(6));
        MiniDenseNetConfig cfg;
        cfg.input_size = 16;
        cfg.stem_channels = c_in;
        cfg.blocks = {{layers, growth}};
        MiniDenseNet<double> net(cfg);
        net.init(trial);
        Tensor4<double> x(1, c_in, 4, 4);
        fd::fill_uniform(x, rng);
        auto y = net.dense_block_forward(0, x);
        CHECK(y.c == c_in + layers * growth);
        CHECK(y.h == 4);
        CHECK(y.w == 4);
        // concatenation preserves the input in the leading channels
        CHECK(slice_channels(y, 0, c_in).data == x.data);
    }

    // 8 + 4*4 = 24, the forced arithmetic case
    MiniDenseNetConfig cfg;
    cfg.input_size = 16;
    cfg.stem_channels = 8;
    cfg.blocks = {{4, 4}};
    MiniDenseNet<double> net(cfg);
    net.init(0);
    Tensor4<double> x(1, 8, 4, 4, 0.5);
    CHECK(net.dense_block_forward(0, x).c == 24);
}

TEST_CASE("dense block matches an explicit concat-list reimplementation") {
    MiniDenseNetConfig cfg;
    cfg.input_size = 16;
    cfg.stem_channels = 3;
    cfg.blocks = {{3, 2}};
    MiniDenseNet<double> net(cfg);
    net.init(21);
    Rng rng(5);
    Tensor4<double> x(2, 3, 4, 4);
    fd::fill_uniform(x, rng);
    auto y = net.dense_block_forward(0, x);

    // reference: keep every layer output in a list, concat explicitly
    std::vector<Tensor4<double>> outputs = {x};
    for (int l = 0; l < 3; ++l) {
        std::vector<const Tensor4<double> *> ptrs;
        for (const auto &o : outputs) ptrs.push_back(&o);
        Tensor4<double> input = concat_channels(ptrs);
        ConvSpec spec{input.c, 2, 3, 3, 1, 1, true};
        auto &w = net.params().at("block0.layer" + std::to_string(l) + ".w");
        auto &b = net.params().at("block0.layer" + std::to_string(l) + ".b");
        auto ref = oracle::naive_conv2d(input, spec, std::vector<double>(w.value.begin(), w.value.end()),
                                        std::vector<double>(b.value.begin(), b.value.end()));
        outputs.push_back(relu_forward(ref));
    }
    std::vector<const Tensor4<double> *> ptrs;
    for (const auto &o : outputs) ptrs.push_back(&o);
    auto expected = concat_channels(ptrs);
    REQUIRE(y.same_shape(expected));
    for (std::size_t i = 0; i < y.size(); ++i)
        CHECK(y.data[i] == doctest::Approx(expected.data[i]).epsilon(1e-12));
}

TEST_CASE("transition compresses channels and halves spatial size") {
    MiniDenseNetConfig cfg;
    cfg.input_size = 56;
    cfg.stem_channels = 16;
    cfg.blocks = {{1, 8}, {1, 8}};
    cfg.compression = 0.5;
    MiniDenseNet<double> net(cfg);
    net.init(4);

    // identity 1x1 weights on a constant input: halved constant maps
    {
        MiniDenseNetConfig idcfg;
        idcfg.input_size = 16;
        idcfg.stem_channels = 2;
        idcfg.blocks = {{1, 2}, {1, 2}};
        idcfg.compression = 1.0;
        MiniDenseNet<double> idnet(idcfg);
        auto &w = idnet.params().at("trans0.w"); // (4,4,1,1)
        for (int i = 0; i < 4; ++i) w.value[static_cast<std::size_t>(i) * 4 + i] = 1.0;
        Tensor4<double> x(1, 4, 6, 6, 2.0);
        auto y = idnet.transition_forward(0, x);
        CHECK(y.c == 4);
        CHECK(y.h == 3);
        CHECK(y.w == 3);
        for (double v : y.data) CHECK(v == 2.0);
    }

    Tensor4<double> x(1, 24, 14, 14, 1.0);
    auto y = net.transition_forward(0, x);
    CHECK(y.c == 12);
    CHECK(y.h == 7);
    CHECK(y.w == 7);

    Tensor4<double> odd(1, 24, 7, 7, 1.0);
    CHECK_THROWS_AS(net.transition_forward(0, odd), std::invalid_argument);
}

TEST_CASE("stem shape walk") {
    MiniDenseNetConfig cfg;
    cfg.input_size = 64;
    cfg.stem_channels = 8;
    cfg.blocks = {{1, 4}};
    MiniDenseNet<double> net(cfg);
    net.init(1);
    Rng rng(8);
    Tensor4<double> images(2, 3, 64, 64);
    fd::fill_uniform(images, rng);
    auto y = net.stem_forward(images);
    CHECK(y.c == 8);
    CHECK(y.h == 16);
    CHECK(y.w == 16);

    Tensor4<double> tiny(1, 3, 2, 2);
    CHECK_THROWS_AS(net.stem_forward(tiny), std::invalid_argument);
    Tensor4<double> wrong(1, 4, 64, 64);
    CHECK_THROWS_AS(net.stem_forward(wrong), std::invalid_argument);

    // zero weights: ReLU(bias) constant maps pooled
    MiniDenseNet<double> zeroed(cfg);
    zeroed.params().at("stem.b").value = {0.5, -1.0, 0.25, 0.0, 2.0, 1.0, 0.125, -0.5};
    auto z = zeroed.stem_forward(images);
    for (int ch = 0; ch < 8; ++ch) {
        const double expect = std::max(zeroed.params().at("stem.b").value[ch], 0.0);
        for (int i = 0; i < 16 * 16; ++i) CHECK(z.plane(0, ch)[i] == expect);
    }
}

TEST_CASE("default config walks 56x56 down to 7x7") {
    MiniDenseNetConfig cfg; // defaults: stem 16, (4,8) -> 0.5 -> (4,8), input 56
    MiniDenseNet<float> net(cfg);
    net.init(42);
    CHECK(net.output_h() == 7);
    CHECK(net.output_w() == 7);
    CHECK(net.output_channels() == 56); // floor(0.5*48)=24, 24+32

    Rng rng(3);
    Tensor4<float> images(2, 3, 56, 56);
    fd::fill_uniform(images, rng, 0.0, 1.0);
    auto f = net.extract(images);
    CHECK(f.n == 2);
    CHECK(f.c == 56);
    CHECK(f.h == 7);
    CHECK(f.w == 7);

    // frozen purity: two extracts are bit-identical
    auto g = net.extract(images);
    CHECK(f.data == g.data);
    CHECK_FALSE(net.trainable());
}

TEST_CASE("constant extractor satisfies the contract") {
    Tensor4<float> feats(1, 5, 3, 3, 0.75f);
    ConstantExtractor<float> ex(feats);
    CHECK(ex.output_channels() == 5);
    CHECK(ex.output_h() == 3);
    CHECK_FALSE(ex.trainable());
    Tensor4<float> images(4, 3, 8, 8, 0.0f);
    auto out = ex.extract(images);
    CHECK(out.n == 4);
    CHECK(out.c == 5);
    for (float v : out.data) CHECK(v == 0.75f);
    CHECK_THROWS_AS(ex.train_backward(out), std::logic_error);

    FeatureExtractor<float> &iface = ex;
    CHECK(iface.extract(images).data == out.data);
}

TEST_CASE("backbone end-to-end gradient check") {
    MiniDenseNetConfig cfg = tiny_config();
    MiniDenseNet<double> net(cfg, /*trainable=*/true);
    net.init(33);
    Rng rng(44);
    Tensor4<double> images(1, 3, 16, 16);
    fd::fill_uniform(images, rng, 0.05, 1.0);

    auto probe = net.extract(images);
    const auto r = fd::random_projection(probe, rng);

    auto y = net.train_forward(images);
    auto dimages = net.train_backward(r);
    std::map<std::string, std::vector<double>> grads;
    for (auto &p : net.params()) grads[p.name] = p.grad;

    auto loss = [&] { return fd::project(net.extract(images), r); };
    double worst = fd::max_rel_err(images.data.data(), images.size(), dimages.data.data(), loss);
    for (auto &p : net.params())
        worst = std::max(worst,
                         fd::max_rel_err(p.value.data(), p.size(), grads[p.name].data(), loss));
    CHECK(worst < 1e-4);
}

TEST_CASE("transition gradient check") {
    MiniDenseNetConfig cfg;
    cfg.input_size = 16;
    cfg.stem_channels = 3;
    cfg.blocks = {{1, 3}, {1, 3}};
    MiniDenseNet<double> net(cfg);
    net.init(5);
    Rng rng(6);
    Tensor4<double> x(1, 6, 4, 4);
    fd::fill_uniform(x, rng);

    auto probe = net.transition_forward(0, x);
    const auto r = fd::random_projection(probe, rng);
    MiniDenseNet<double>::TransitionTape tape;
    net.transition_forward(0, x, &tape);
    auto dpool = avg_pool2d_backward(r, tape.pool);
    auto dx = conv2d_backward(dpool, tape.conv);
    auto &w = net.params().at("trans0.w");
    auto &b = net.params().at("trans0.b");
    std::vector<double> wg = w.grad, bg = b.grad;

    auto loss = [&] { return fd::project(net.transition_forward(0, x), r); };
    double worst = fd::max_rel_err(x.data.data(), x.size(), dx.data.data(), loss);
    worst = std::max(worst, fd::max_rel_err(w.value.data(), w.size(), wg.data(), loss));
    worst = std::max(worst, fd::max_rel_err(b.value.data(), b.size(), bg.data(), loss));
    CHECK(worst < 1e-4);
}
