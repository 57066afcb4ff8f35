#pragma once

#include <string>
#include <vector>

#include "msse/conv.hpp"
#include "msse/layers.hpp"

namespace msse {

// Multi-scale squeeze-excitation classification head: two parallel depthwise
// branches (3x3 and 5x5) each projected to proj_channels by a 1x1 conv, the
// concat refined by SE channel gates and a 7x7 spatial sigmoid mask, dropout,
// a residual add back to the concat, then GAP and a fully connected classifier.
struct MsseHeadConfig {
    int in_channels = 1920;
    int branch_kernel_small = 3;
    int branch_kernel_large = 5;
    int proj_channels = 128;
    int fused_channels = 256; // must equal 2 * proj_channels
    int se_ratio = 16;
    int spatial_kernel = 7;
    double dropout_rate = 0.3;
    int num_classes = 9;

    void validate() const {
        if (in_channels < 1 || proj_channels < 1 || num_classes < 1)
            throw std::invalid_argument("head: channel and class counts must be >= 1");
        if (fused_channels != 2 * proj_channels)
            throw std::invalid_argument("head: fused_channels must equal 2 * proj_channels");
        if (se_ratio < 1 || fused_channels % se_ratio != 0)
            throw std::invalid_argument("head: se_ratio must divide fused_channels");
        if (spatial_kernel < 1 || spatial_kernel % 2 == 0)
            throw std::invalid_argument("head: spatial_kernel must be odd");
        if (branch_kernel_small < 1 || branch_kernel_small % 2 == 0 ||
            branch_kernel_large < 1 || branch_kernel_large % 2 == 0)
            throw std::invalid_argument("head: branch kernels must be odd");
        if (dropout_rate < 0.0 || dropout_rate >= 1.0)
            throw std::invalid_argument("head: dropout_rate must be in [0, 1)");
    }
};

template <class T>
struct BranchTape {
    ConvTape<T> dw;
    EwTape<Tensor4<T>> relu1;
    ConvTape<T> pw;
    EwTape<Tensor4<T>> relu2;
};

template <class T>
struct SeTape {
    Tensor4<T> u;
    GapTape gap;
    DenseTape<T> fc1;
    EwTape<Tensor2<T>> relu;
    DenseTape<T> fc2;
    EwTape<Tensor2<T>> sig;
    Tensor2<T> gates;
};

template <class T>
struct SpatialTape {
    Tensor4<T> u;
    ChannelStats<T> stats;
    ConvTape<T> conv;
    EwTape<Tensor4<T>> sig;
    Tensor4<T> mask; // (n,1,h,w)
};

template <class T>
struct MsseHeadTape {
    BranchTape<T> b3, b5;
    Tensor4<T> u; // fused concat, residual source
    SeTape<T> se;
    SpatialTape<T> spatial;
    DropoutTape<T> drop;
    Tensor4<T> z; // post-residual map, the Grad-CAM target layer
    GapTape gap;
    DenseTape<T> fc;
};

template <class T>
class MsseHead {
public:
    using Tape = MsseHeadTape<T>;

    explicit MsseHead(const MsseHeadConfig &cfg) : cfg_(cfg) {
        cfg_.validate();
        dw3_ = {cfg_.in_channels, cfg_.in_channels, cfg_.branch_kernel_small,
                cfg_.branch_kernel_small, cfg_.in_channels, 1, true};
        dw5_ = {cfg_.in_channels, cfg_.in_channels, cfg_.branch_kernel_large,
                cfg_.branch_kernel_large, cfg_.in_channels, 1, true};
        pw_ = {cfg_.in_channels, cfg_.proj_channels, 1, 1, 1, 1, true};
        spatial_ = {2, 1, cfg_.spatial_kernel, cfg_.spatial_kernel, 1, 1, true};

        params_.add("dw3.w", dw3_.kernel_dims());
        params_.add("dw3.b", {cfg_.in_channels});
        params_.add("pw3.w", pw_.kernel_dims());
        params_.add("pw3.b", {cfg_.proj_channels});
        params_.add("dw5.w", dw5_.kernel_dims());
        params_.add("dw5.b", {cfg_.in_channels});
        params_.add("pw5.w", pw_.kernel_dims());
        params_.add("pw5.b", {cfg_.proj_channels});
        const int squeezed = cfg_.fused_channels / cfg_.se_ratio;
        params_.add("se_reduce.w", {cfg_.fused_channels, squeezed});
        params_.add("se_reduce.b", {squeezed});
        params_.add("se_expand.w", {squeezed, cfg_.fused_channels});
        params_.add("se_expand.b", {cfg_.fused_channels});
        params_.add("spatial.w", spatial_.kernel_dims());
        params_.add("spatial.b", {1});
        params_.add("fc.w", {cfg_.fused_channels, cfg_.num_classes});
        params_.add("fc.b", {cfg_.num_classes});
    }

    void init(std::uint64_t seed) {
        Rng rng(mix(seed, 0x68656164ull));
        conv_init(params_.at("dw3.w"), dw3_, rng);
        conv_init(params_.at("pw3.w"), pw_, rng);
        conv_init(params_.at("dw5.w"), dw5_, rng);
        conv_init(params_.at("pw5.w"), pw_, rng);
        const int squeezed = cfg_.fused_channels / cfg_.se_ratio;
        glorot_init(params_.at("se_reduce.w"), cfg_.fused_channels, squeezed, rng);
        glorot_init(params_.at("se_expand.w"), squeezed, cfg_.fused_channels, rng);
        conv_init(params_.at("spatial.w"), spatial_, rng);
        glorot_init(params_.at("fc.w"), cfg_.fused_channels, cfg_.num_classes, rng);
    }

    // depthwise kxk -> ReLU -> 1x1 projection -> ReLU, spatial size preserved
    Tensor4<T> branch_forward(const Tensor4<T> &x, int k, BranchTape<T> *tape = nullptr) {
        const bool small = k == cfg_.branch_kernel_small;
        if (!small && k != cfg_.branch_kernel_large)
            throw std::invalid_argument("branch_forward: no branch with kernel size " +
                                        std::to_string(k));
        const std::string dw = small ? "dw3" : "dw5";
        const std::string pw = small ? "pw3" : "pw5";
        Tensor4<T> y = conv2d_forward(x, small ? dw3_ : dw5_, params_.at(dw + ".w"),
                                      &params_.at(dw + ".b"), tape ? &tape->dw : nullptr);
        y = relu_forward(y, tape ? &tape->relu1 : nullptr);
        y = conv2d_forward(y, pw_, params_.at(pw + ".w"), &params_.at(pw + ".b"),
                           tape ? &tape->pw : nullptr);
        return relu_forward(y, tape ? &tape->relu2 : nullptr);
    }

    Tensor4<T> branch_backward(const Tensor4<T> &dy, BranchTape<T> &tape) {
        Tensor4<T> d = relu_backward(dy, tape.relu2);
        d = conv2d_backward(d, tape.pw);
        d = relu_backward(d, tape.relu1);
        return conv2d_backward(d, tape.dw);
    }

    // squeeze (GAP) -> bottleneck FC pair -> sigmoid gates -> channel rescale
    Tensor4<T> se_channel_attention(const Tensor4<T> &u, SeTape<T> *tape = nullptr) {
        if (u.c != cfg_.fused_channels)
            throw std::invalid_argument("se: expected " + std::to_string(cfg_.fused_channels) +
                                        " channels, got " + std::to_string(u.c));
        SeTape<T> local;
        SeTape<T> &t = tape ? *tape : local;
        Tensor2<T> squeezed = global_avg_pool_forward(u, &t.gap);
        Tensor2<T> hidden = dense_forward(squeezed, params_.at("se_reduce.w"),
                                          &params_.at("se_reduce.b"), &t.fc1);
        hidden = relu_forward(hidden, &t.relu);
        Tensor2<T> gates = dense_forward(hidden, params_.at("se_expand.w"),
                                         &params_.at("se_expand.b"), &t.fc2);
        gates = sigmoid_forward(gates, &t.sig);
        Tensor4<T> y(u.n, u.c, u.h, u.w);
        for (int b = 0; b < u.n; ++b)
            for (int ch = 0; ch < u.c; ++ch) {
                const T g = gates.at(b, ch);
                const T *up = u.plane(b, ch);
                T *yp = y.plane(b, ch);
                for (int i = 0; i < u.h * u.w; ++i) yp[i] = up[i] * g;
            }
        if (tape) {
            tape->u = u;
            tape->gates = std::move(gates);
        }
        return y;
    }

    Tensor4<T> se_backward(const Tensor4<T> &dy, SeTape<T> &tape) {
        const Tensor4<T> &u = tape.u;
        Tensor4<T> du(u.n, u.c, u.h, u.w);
        Tensor2<T> dgates(u.n, u.c);
        for (int b = 0; b < u.n; ++b)
            for (int ch = 0; ch < u.c; ++ch) {
                const T g = tape.gates.at(b, ch);
                const T *dyp = dy.plane(b, ch);
                const T *up = u.plane(b, ch);
                T *dup = du.plane(b, ch);
                double dg = 0.0;
                for (int i = 0; i < u.h * u.w; ++i) {
                    dup[i] = dyp[i] * g;
                    dg += static_cast<double>(dyp[i]) * static_cast<double>(up[i]);
                }
                dgates.at(b, ch) = static_cast<T>(dg);
            }
        Tensor2<T> d2 = sigmoid_backward(dgates, tape.sig);
        d2 = dense_backward(d2, tape.fc2);
        d2 = relu_backward(d2, tape.relu);
        d2 = dense_backward(d2, tape.fc1);
        return ew_add(du, global_avg_pool_backward(d2, tape.gap));
    }

    // avg+max channel descriptors -> 7x7 conv -> sigmoid mask -> per-pixel scale
    Tensor4<T> spatial_attention(const Tensor4<T> &u, SpatialTape<T> *tape = nullptr) {
        SpatialTape<T> local;
        SpatialTape<T> &t = tape ? *tape : local;
        t.stats = channel_stats(u);
        Tensor4<T> desc = concat_channels(t.stats.avg, t.stats.max);
        Tensor4<T> m = conv2d_forward(desc, spatial_, params_.at("spatial.w"),
                                      &params_.at("spatial.b"), &t.conv);
        m = sigmoid_forward(m, &t.sig);
        Tensor4<T> y(u.n, u.c, u.h, u.w);
        for (int b = 0; b < u.n; ++b) {
            const T *mp = m.plane(b, 0);
            for (int ch = 0; ch < u.c; ++ch) {
                const T *up = u.plane(b, ch);
                T *yp = y.plane(b, ch);
                for (int i = 0; i < u.h * u.w; ++i) yp[i] = up[i] * mp[i];
            }
        }
        if (tape) {
            tape->u = u;
            tape->mask = std::move(m);
        }
        return y;
    }

    Tensor4<T> spatial_backward(const Tensor4<T> &dy, SpatialTape<T> &tape) {
        const Tensor4<T> &u = tape.u;
        Tensor4<T> du(u.n, u.c, u.h, u.w);
        Tensor4<T> dmask(u.n, 1, u.h, u.w);
        for (int b = 0; b < u.n; ++b) {
            const T *mp = tape.mask.plane(b, 0);
            T *dmp = dmask.plane(b, 0);
            for (int ch = 0; ch < u.c; ++ch) {
                const T *dyp = dy.plane(b, ch);
                const T *up = u.plane(b, ch);
                T *dup = du.plane(b, ch);
                for (int i = 0; i < u.h * u.w; ++i) {
                    dup[i] = dyp[i] * mp[i];
                    dmp[i] += dyp[i] * up[i];
                }
            }
        }
        Tensor4<T> d = sigmoid_backward(dmask, tape.sig);
        d = conv2d_backward(d, tape.conv);
        Tensor4<T> davg = slice_channels(d, 0, 1);
        Tensor4<T> dmax = slice_channels(d, 1, 1);
        return ew_add(du, channel_stats_backward(davg, dmax, tape.stats, u.c));
    }

    // u = concat(branch3, branch5); v = spatial(se(u)); w = dropout(v);
    // z = w + u; logits = FC(GAP(z)).
    Tensor2<T> forward(const Tensor4<T> &features, bool train, Rng &rng, Tape *tape = nullptr) {
        if (features.c != cfg_.in_channels)
            throw std::invalid_argument("head: expected " + std::to_string(cfg_.in_channels) +
                                        " input channels, got " + std::to_string(features.c));
        Tape local;
        Tape &t = tape ? *tape : local;
        Tensor4<T> b3 = branch_forward(features, cfg_.branch_kernel_small, &t.b3);
        Tensor4<T> b5 = branch_forward(features, cfg_.branch_kernel_large, &t.b5);
        t.u = concat_channels(b3, b5);
        Tensor4<T> v = se_channel_attention(t.u, &t.se);
        v = spatial_attention(v, &t.spatial);
        v = dropout_forward(v, cfg_.dropout_rate, train, rng, &t.drop);
        t.z = ew_add(v, t.u);
        Tensor2<T> pooled = global_avg_pool_forward(t.z, &t.gap);
        return dense_forward(pooled, params_.at("fc.w"), &params_.at("fc.b"), &t.fc);
    }

    Tensor4<T> backward(const Tensor2<T> &dlogits, Tape &tape) {
        Tensor2<T> dpooled = dense_backward(dlogits, tape.fc);
        Tensor4<T> dz = global_avg_pool_backward(dpooled, tape.gap);
        Tensor4<T> dv = dropout_backward(dz, tape.drop);
        dv = spatial_backward(dv, tape.spatial);
        dv = se_backward(dv, tape.se);
        Tensor4<T> du = ew_add(dv, dz); // attention path + residual path
        Tensor4<T> db3 = slice_channels(du, 0, cfg_.proj_channels);
        Tensor4<T> db5 = slice_channels(du, cfg_.proj_channels, cfg_.proj_channels);
        return ew_add(branch_backward(db3, tape.b3), branch_backward(db5, tape.b5));
    }

    ParamStore<T> &params() { return params_; }
    const MsseHeadConfig &config() const { return cfg_; }

private:
    MsseHeadConfig cfg_;
    ParamStore<T> params_;
    ConvSpec dw3_, dw5_, pw_, spatial_;
};

// Plain GAP -> FC classifier over the same features; the minimal reference
// head the attention block is measured against.
template <class T>
class GapFcHead {
public:
    struct Tape {
        GapTape gap;
        DenseTape<T> fc;
    };

    GapFcHead(int in_channels, int num_classes)
        : in_channels_(in_channels), num_classes_(num_classes) {
        params_.add("fc.w", {in_channels, num_classes});
        params_.add("fc.b", {num_classes});
    }

    void init(std::uint64_t seed) {
        Rng rng(mix(seed, 0x68656164ull));
        glorot_init(params_.at("fc.w"), in_channels_, num_classes_, rng);
    }

    Tensor2<T> forward(const Tensor4<T> &features, bool /*train*/, Rng & /*rng*/,
                       Tape *tape = nullptr) {
        Tape local;
        Tape &t = tape ? *tape : local;
        Tensor2<T> pooled = global_avg_pool_forward(features, &t.gap);
        return dense_forward(pooled, params_.at("fc.w"), &params_.at("fc.b"), &t.fc);
    }

    Tensor4<T> backward(const Tensor2<T> &dlogits, Tape &tape) {
        Tensor2<T> dpooled = dense_backward(dlogits, tape.fc);
        return global_avg_pool_backward(dpooled, tape.gap);
    }

    ParamStore<T> &params() { return params_; }

private:
    int in_channels_, num_classes_;
    ParamStore<T> params_;
};

} // namespace msse
