#pragma once

#include <memory>
#include <string>
#include <vector>

#include "msse/conv.hpp"
#include "msse/layers.hpp"

namespace msse {

// Contract every feature source satisfies: a pure mapping from image batches
// to feature maps of an advertised shape. Trainable extractors additionally
// expose the tape-carrying forward/backward pair.
template <class T>
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;

    virtual Tensor4<T> extract(const Tensor4<T> &images) = 0;
    virtual bool trainable() const = 0;
    virtual int output_channels() const = 0;
    virtual int output_h() const = 0;
    virtual int output_w() const = 0;

    virtual Tensor4<T> train_forward(const Tensor4<T> &images) { return extract(images); }
    virtual Tensor4<T> train_backward(const Tensor4<T> & /*dfeatures*/) {
        throw std::logic_error("FeatureExtractor: backward called on a non-trainable extractor");
    }
    virtual ParamStore<T> *trainable_params() { return nullptr; }
};

struct DenseBlockSpec {
    int layers = 0; // L
    int growth = 0; // g, channels added per composite
};

struct MiniDenseNetConfig {
    int input_size = 56;      // square RGB input
    int stem_channels = 16;
    std::vector<DenseBlockSpec> blocks = {{4, 8}, {4, 8}};
    double compression = 0.5; // transition channel fraction, floor, min 1

    void validate() const {
        if (input_size < 4) throw std::invalid_argument("backbone: input must be at least 4x4");
        if (stem_channels < 1) throw std::invalid_argument("backbone: stem_channels must be >= 1");
        if (blocks.empty()) throw std::invalid_argument("backbone: at least one dense block");
        for (const auto &b : blocks)
            if (b.layers < 1 || b.growth < 1)
                throw std::invalid_argument("backbone: block layers and growth must be >= 1");
        if (compression <= 0.0 || compression > 1.0)
            throw std::invalid_argument("backbone: compression must be in (0,1]");
    }
};

template <class T>
struct DenseBlockTape {
    std::vector<ConvTape<T>> convs;
    std::vector<EwTape<Tensor4<T>>> relus;
};

// One dense block: layer l consumes the concat of the block input and all
// earlier layer outputs, emits `growth` channels; the block returns the full
// concat (C_in + L*growth channels). An empty layer list is the identity.
template <class T>
Tensor4<T> dense_block_apply(const Tensor4<T> &x, const std::vector<ConvSpec> &specs,
                             const std::vector<Param<T> *> &weights,
                             const std::vector<Param<T> *> &biases,
                             DenseBlockTape<T> *tape = nullptr) {
    Tensor4<T> state = x;
    for (std::size_t l = 0; l < specs.size(); ++l) {
        if (state.c != specs[l].in_channels)
            throw std::invalid_argument("dense block: layer " + std::to_string(l) + " expects " +
                                        std::to_string(specs[l].in_channels) + " channels, got " +
                                        std::to_string(state.c));
        ConvTape<T> ct;
        EwTape<Tensor4<T>> rt;
        Tensor4<T> out = conv2d_forward(state, specs[l], *weights[l], biases[l],
                                        tape ? &ct : nullptr);
        out = relu_forward(out, tape ? &rt : nullptr);
        if (tape) {
            tape->convs.push_back(std::move(ct));
            tape->relus.push_back(std::move(rt));
        }
        state = concat_channels(state, out);
    }
    return state;
}

template <class T>
Tensor4<T> dense_block_adjoint(const Tensor4<T> &dstate_in, DenseBlockTape<T> &tape) {
    Tensor4<T> dstate = dstate_in;
    for (std::size_t l = tape.convs.size(); l-- > 0;) {
        const int grown = tape.convs[l].spec.out_channels;
        const int prev_c = dstate.c - grown;
        Tensor4<T> dprev = slice_channels(dstate, 0, prev_c);
        Tensor4<T> dout = slice_channels(dstate, prev_c, grown);
        dout = relu_backward(dout, tape.relus[l]);
        dprev = ew_add(dprev, conv2d_backward(dout, tape.convs[l]));
        dstate = std::move(dprev);
    }
    return dstate;
}

// Miniature densely connected feature extractor: 7x7/2 stem conv + ReLU +
// 3x3/2 max-pool, then dense blocks (composite = 3x3 same conv + ReLU) with a
// 1x1-conv + 2x2-avg-pool transition between consecutive blocks.
template <class T>
class MiniDenseNet : public FeatureExtractor<T> {
public:
    struct TransitionTape {
        ConvTape<T> conv;
        AvgPoolTape pool;
    };
    struct Tape {
        ConvTape<T> stem_conv;
        EwTape<Tensor4<T>> stem_relu;
        MaxPoolTape stem_pool;
        std::vector<DenseBlockTape<T>> blocks;
        std::vector<TransitionTape> transitions;
    };

    explicit MiniDenseNet(const MiniDenseNetConfig &cfg, bool trainable = false)
        : cfg_(cfg), trainable_(trainable) {
        cfg_.validate();
        build();
    }

    void init(std::uint64_t seed) {
        Rng rng(mix(seed, 0x6261636bull));
        conv_init(params_.at("stem.w"), stem_spec_, rng);
        for (std::size_t bi = 0; bi < cfg_.blocks.size(); ++bi) {
            for (int l = 0; l < cfg_.blocks[bi].layers; ++l)
                conv_init(params_.at(layer_name(bi, l) + ".w"), block_specs_[bi][l], rng);
            if (bi + 1 < cfg_.blocks.size())
                conv_init(params_.at(trans_name(bi) + ".w"), trans_specs_[bi], rng);
        }
    }

    // FeatureExtractor surface -------------------------------------------------
    Tensor4<T> extract(const Tensor4<T> &images) override { return forward(images, nullptr); }
    bool trainable() const override { return trainable_; }
    int output_channels() const override { return out_c_; }
    int output_h() const override { return out_hw_; }
    int output_w() const override { return out_hw_; }

    Tensor4<T> train_forward(const Tensor4<T> &images) override {
        tape_ = Tape{};
        return forward(images, &tape_);
    }
    Tensor4<T> train_backward(const Tensor4<T> &dfeatures) override {
        return backward(dfeatures, tape_);
    }
    ParamStore<T> *trainable_params() override { return trainable_ ? &params_ : nullptr; }

    // Stage-level ops ----------------------------------------------------------
    Tensor4<T> stem_forward(const Tensor4<T> &images, Tape *tape = nullptr) {
        if (images.c != 3)
            throw std::invalid_argument("stem: expected 3-channel images, got " +
                                        std::to_string(images.c));
        if (images.h < 4 || images.w < 4)
            throw std::invalid_argument("stem: input smaller than 4x4");
        Tensor4<T> y = conv2d_forward(images, stem_spec_, params_.at("stem.w"),
                                      &params_.at("stem.b"), tape ? &tape->stem_conv : nullptr);
        y = relu_forward(y, tape ? &tape->stem_relu : nullptr);
        return max_pool2d_forward(y, 3, 2, tape ? &tape->stem_pool : nullptr);
    }

    Tensor4<T> dense_block_forward(std::size_t bi, const Tensor4<T> &x,
                                   DenseBlockTape<T> *tape = nullptr) {
        std::vector<Param<T> *> ws, bs;
        for (int l = 0; l < cfg_.blocks[bi].layers; ++l) {
            ws.push_back(&params_.at(layer_name(bi, l) + ".w"));
            bs.push_back(&params_.at(layer_name(bi, l) + ".b"));
        }
        return dense_block_apply(x, block_specs_[bi], ws, bs, tape);
    }

    Tensor4<T> transition_forward(std::size_t ti, const Tensor4<T> &x,
                                  TransitionTape *tape = nullptr) {
        if (x.h % 2 != 0 || x.w % 2 != 0)
            throw std::invalid_argument("transition: spatial dims must be even, got " +
                                        x.shape_str());
        Tensor4<T> y = conv2d_forward(x, trans_specs_[ti], params_.at(trans_name(ti) + ".w"),
                                      &params_.at(trans_name(ti) + ".b"),
                                      tape ? &tape->conv : nullptr);
        return avg_pool2d_forward(y, 2, 2, tape ? &tape->pool : nullptr);
    }

    Tensor4<T> forward(const Tensor4<T> &images, Tape *tape) {
        if (images.h != cfg_.input_size || images.w != cfg_.input_size)
            throw std::invalid_argument("backbone: configured for " +
                                        std::to_string(cfg_.input_size) + "x" +
                                        std::to_string(cfg_.input_size) + " input, got " +
                                        images.shape_str());
        if (tape) {
            tape->blocks.resize(cfg_.blocks.size());
            tape->transitions.resize(cfg_.blocks.size() - 1);
        }
        Tensor4<T> x = stem_forward(images, tape);
        for (std::size_t bi = 0; bi < cfg_.blocks.size(); ++bi) {
            x = dense_block_forward(bi, x, tape ? &tape->blocks[bi] : nullptr);
            if (bi + 1 < cfg_.blocks.size())
                x = transition_forward(bi, x, tape ? &tape->transitions[bi] : nullptr);
        }
        return x;
    }

    Tensor4<T> backward(const Tensor4<T> &dfeatures, Tape &tape) {
        Tensor4<T> d = dfeatures;
        for (std::size_t bi = cfg_.blocks.size(); bi-- > 0;) {
            if (bi + 1 < cfg_.blocks.size()) {
                TransitionTape &tt = tape.transitions[bi];
                d = avg_pool2d_backward(d, tt.pool);
                d = conv2d_backward(d, tt.conv);
            }
            d = dense_block_adjoint(d, tape.blocks[bi]);
        }
        d = max_pool2d_backward(d, tape.stem_pool);
        d = relu_backward(d, tape.stem_relu);
        return conv2d_backward(d, tape.stem_conv);
    }

    ParamStore<T> &params() { return params_; }
    const MiniDenseNetConfig &config() const { return cfg_; }
    int block_input_channels(std::size_t bi) const { return block_in_[bi]; }

private:
    std::string layer_name(std::size_t bi, int l) const {
        return "block" + std::to_string(bi) + ".layer" + std::to_string(l);
    }
    std::string trans_name(std::size_t ti) const { return "trans" + std::to_string(ti); }

    void build() {
        stem_spec_ = {3, cfg_.stem_channels, 7, 7, 1, 2, true};
        params_.add("stem.w", stem_spec_.kernel_dims());
        params_.add("stem.b", {cfg_.stem_channels});

        int hw = conv_same_out(conv_same_out(cfg_.input_size, 2), 2);
        int c = cfg_.stem_channels;
        block_specs_.resize(cfg_.blocks.size());
        trans_specs_.resize(cfg_.blocks.size() - 1);
        block_in_.resize(cfg_.blocks.size());
        for (std::size_t bi = 0; bi < cfg_.blocks.size(); ++bi) {
            block_in_[bi] = c;
            for (int l = 0; l < cfg_.blocks[bi].layers; ++l) {
                ConvSpec spec{c, cfg_.blocks[bi].growth, 3, 3, 1, 1, true};
                block_specs_[bi].push_back(spec);
                params_.add(layer_name(bi, l) + ".w", spec.kernel_dims());
                params_.add(layer_name(bi, l) + ".b", {spec.out_channels});
                c += cfg_.blocks[bi].growth;
            }
            if (bi + 1 < cfg_.blocks.size()) {
                int compressed = std::max(1, static_cast<int>(cfg_.compression * c));
                ConvSpec spec{c, compressed, 1, 1, 1, 1, true};
                trans_specs_[bi] = spec;
                params_.add(trans_name(bi) + ".w", spec.kernel_dims());
                params_.add(trans_name(bi) + ".b", {compressed});
                c = compressed;
                if (hw % 2 != 0)
                    throw std::invalid_argument("backbone: transition " + std::to_string(bi) +
                                                " would see odd spatial size " +
                                                std::to_string(hw));
                hw /= 2;
            }
        }
        out_c_ = c;
        out_hw_ = hw;
    }

    MiniDenseNetConfig cfg_;
    bool trainable_ = false;
    ParamStore<T> params_;
    ConvSpec stem_spec_;
    std::vector<std::vector<ConvSpec>> block_specs_;
    std::vector<ConvSpec> trans_specs_;
    std::vector<int> block_in_;
    int out_c_ = 0;
    int out_hw_ = 0;
    Tape tape_;
};

// Fixed-output stand-in; useful wherever a frozen feature source is enough.
template <class T>
class ConstantExtractor : public FeatureExtractor<T> {
public:
    explicit ConstantExtractor(Tensor4<T> features) : features_(std::move(features)) {}

    Tensor4<T> extract(const Tensor4<T> &images) override {
        Tensor4<T> out(images.n, features_.c, features_.h, features_.w);
        for (int b = 0; b < images.n; ++b)
            std::copy(features_.plane(0, 0),
                      features_.plane(0, 0) +
                          static_cast<std::size_t>(features_.c) * features_.h * features_.w,
                      out.plane(b, 0));
        return out;
    }
    bool trainable() const override { return false; }
    int output_channels() const override { return features_.c; }
    int output_h() const override { return features_.h; }
    int output_w() const override { return features_.w; }

private:
    Tensor4<T> features_; // single-sample template, replicated across the batch
};

} // namespace msse
