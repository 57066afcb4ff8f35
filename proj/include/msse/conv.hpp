#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "msse/params.hpp"
#include "msse/rng.hpp"
#include "msse/tensor.hpp"

namespace msse {

// Grouped 2-D cross-correlation under "same" zero padding.
// groups == in_channels == out_channels is a depthwise convolution,
// kernel 1x1 with groups == 1 is a pointwise convolution.
struct ConvSpec {
    int in_channels = 0;
    int out_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    int groups = 1;
    int stride = 1;
    bool use_bias = true;

    void validate() const {
        if (in_channels < 1 || out_channels < 1 || kernel_h < 1 || kernel_w < 1 || groups < 1)
            throw std::invalid_argument("ConvSpec: channels, kernel dims and groups must be >= 1");
        if (stride != 1 && stride != 2)
            throw std::invalid_argument("ConvSpec: stride must be 1 or 2");
        if (in_channels % groups != 0 || out_channels % groups != 0)
            throw std::invalid_argument("ConvSpec: channels must be divisible by groups");
    }

    bool depthwise() const { return groups == in_channels && groups == out_channels; }

    std::vector<int> kernel_dims() const {
        return {out_channels, in_channels / groups, kernel_h, kernel_w};
    }
};

// "same" output size: ceil(in / stride).
inline int conv_same_out(int in, int stride) { return (in + stride - 1) / stride; }

// Leading pad so the padded window walk reproduces ceil(in/stride) outputs.
inline int conv_same_pad(int in, int k, int stride) {
    int out = conv_same_out(in, stride);
    int total = std::max((out - 1) * stride + k - in, 0);
    return total / 2;
}

template <class T>
struct ConvTape {
    ConvSpec spec;
    Tensor4<T> x;
    Param<T> *w = nullptr;
    Param<T> *b = nullptr;
};

namespace detail {
// Valid output range [lo, hi) for one kernel offset: positions whose sampled
// input index stays inside [0, in).
inline void out_range(int in, int out, int stride, int pad, int k_off, int &lo, int &hi) {
    int a = pad - k_off; // out*stride must be >= a and <= in - 1 + a
    lo = a <= 0 ? 0 : (a + stride - 1) / stride;
    int top = in - 1 + a;
    hi = top < 0 ? 0 : std::min(out, top / stride + 1);
    if (lo > hi) lo = hi;
}
} // namespace detail

template <class T>
Tensor4<T> conv2d_forward(const Tensor4<T> &x, const ConvSpec &spec, Param<T> &w,
                          Param<T> *bias, ConvTape<T> *tape = nullptr) {
    spec.validate();
    if (x.c != spec.in_channels)
        throw std::invalid_argument("conv2d: input has " + std::to_string(x.c) +
                                    " channels, spec expects " + std::to_string(spec.in_channels));
    if (w.dims != spec.kernel_dims())
        throw std::invalid_argument("conv2d: kernel tensor shape does not match spec");
    if (spec.use_bias && !bias)
        throw std::invalid_argument("conv2d: spec requires a bias parameter");

    const int icg = spec.in_channels / spec.groups;
    const int ocg = spec.out_channels / spec.groups;
    const int oh = conv_same_out(x.h, spec.stride);
    const int ow = conv_same_out(x.w, spec.stride);
    const int ph = conv_same_pad(x.h, spec.kernel_h, spec.stride);
    const int pw = conv_same_pad(x.w, spec.kernel_w, spec.stride);
    const int s = spec.stride;

    Tensor4<T> y(x.n, spec.out_channels, oh, ow);
    // 64-bit accumulator per output plane; per-output contribution order is
    // (in-channel, ky, kx) ascending, matching the reference summation.
    std::vector<double> acc(static_cast<std::size_t>(oh) * ow);
    for (int b = 0; b < x.n; ++b) {
        for (int oc = 0; oc < spec.out_channels; ++oc) {
            std::fill(acc.begin(), acc.end(), 0.0);
            const int g = oc / ocg;
            for (int j = 0; j < icg; ++j) {
                const T *xp = x.plane(b, g * icg + j);
                const T *wrow =
                    w.value.data() + (static_cast<std::size_t>(oc) * icg + j) * spec.kernel_h * spec.kernel_w;
                for (int ky = 0; ky < spec.kernel_h; ++ky) {
                    int oy_lo, oy_hi;
                    detail::out_range(x.h, oh, s, ph, ky, oy_lo, oy_hi);
                    for (int kx = 0; kx < spec.kernel_w; ++kx) {
                        const double wv = static_cast<double>(wrow[ky * spec.kernel_w + kx]);
                        int ox_lo, ox_hi;
                        detail::out_range(x.w, ow, s, pw, kx, ox_lo, ox_hi);
                        for (int oy = oy_lo; oy < oy_hi; ++oy) {
                            const T *xrow = xp + static_cast<std::size_t>(oy * s + ky - ph) * x.w;
                            double *arow = acc.data() + static_cast<std::size_t>(oy) * ow;
                            for (int ox = ox_lo; ox < ox_hi; ++ox)
                                arow[ox] += wv * static_cast<double>(xrow[ox * s + kx - pw]);
                        }
                    }
                }
            }
            const double bv = spec.use_bias ? static_cast<double>(bias->value[oc]) : 0.0;
            T *yp = y.plane(b, oc);
            for (std::size_t i = 0; i < acc.size(); ++i) yp[i] = static_cast<T>(acc[i] + bv);
        }
    }
    if (tape) {
        tape->spec = spec;
        tape->x = x;
        tape->w = &w;
        tape->b = bias;
    }
    return y;
}

// Adjoint of conv2d_forward. Returns d(input); kernel and bias gradients are
// accumulated into the tape's parameters (caller zeroes between steps).
template <class T>
Tensor4<T> conv2d_backward(const Tensor4<T> &dy, const ConvTape<T> &tape) {
    if (!tape.w) throw std::invalid_argument("conv2d_backward: tape was not filled by a forward");
    const ConvSpec &spec = tape.spec;
    const Tensor4<T> &x = tape.x;
    const int icg = spec.in_channels / spec.groups;
    const int ocg = spec.out_channels / spec.groups;
    const int oh = conv_same_out(x.h, spec.stride);
    const int ow = conv_same_out(x.w, spec.stride);
    if (dy.n != x.n || dy.c != spec.out_channels || dy.h != oh || dy.w != ow)
        throw std::invalid_argument("conv2d_backward: upstream gradient shape mismatch");
    const int ph = conv_same_pad(x.h, spec.kernel_h, spec.stride);
    const int pw = conv_same_pad(x.w, spec.kernel_w, spec.stride);
    const int s = spec.stride;
    Param<T> &w = *tape.w;

    Tensor4<T> dx(x.n, x.c, x.h, x.w);
    std::vector<double> acc(static_cast<std::size_t>(x.h) * x.w);
    for (int b = 0; b < x.n; ++b) {
        for (int ic = 0; ic < x.c; ++ic) {
            std::fill(acc.begin(), acc.end(), 0.0);
            const int g = ic / icg;
            const int j = ic % icg;
            for (int oj = 0; oj < ocg; ++oj) {
                const int oc = g * ocg + oj;
                const T *dyp = dy.plane(b, oc);
                const T *wrow =
                    w.value.data() + (static_cast<std::size_t>(oc) * icg + j) * spec.kernel_h * spec.kernel_w;
                for (int ky = 0; ky < spec.kernel_h; ++ky) {
                    int oy_lo, oy_hi;
                    detail::out_range(x.h, oh, s, ph, ky, oy_lo, oy_hi);
                    for (int kx = 0; kx < spec.kernel_w; ++kx) {
                        const double wv = static_cast<double>(wrow[ky * spec.kernel_w + kx]);
                        int ox_lo, ox_hi;
                        detail::out_range(x.w, ow, s, pw, kx, ox_lo, ox_hi);
                        for (int oy = oy_lo; oy < oy_hi; ++oy) {
                            double *arow = acc.data() + static_cast<std::size_t>(oy * s + ky - ph) * x.w;
                            const T *drow = dyp + static_cast<std::size_t>(oy) * ow;
                            for (int ox = ox_lo; ox < ox_hi; ++ox)
                                arow[ox * s + kx - pw] += wv * static_cast<double>(drow[ox]);
                        }
                    }
                }
            }
            T *dxp = dx.plane(b, ic);
            for (std::size_t i = 0; i < acc.size(); ++i) dxp[i] = static_cast<T>(acc[i]);
        }
    }

    for (int oc = 0; oc < spec.out_channels; ++oc) {
        const int g = oc / ocg;
        for (int j = 0; j < icg; ++j) {
            const int ic = g * icg + j;
            for (int ky = 0; ky < spec.kernel_h; ++ky) {
                int oy_lo, oy_hi;
                detail::out_range(x.h, oh, s, ph, ky, oy_lo, oy_hi);
                for (int kx = 0; kx < spec.kernel_w; ++kx) {
                    int ox_lo, ox_hi;
                    detail::out_range(x.w, ow, s, pw, kx, ox_lo, ox_hi);
                    double sum = 0.0;
                    for (int b = 0; b < x.n; ++b) {
                        const T *xp = x.plane(b, ic);
                        const T *dyp = dy.plane(b, oc);
                        for (int oy = oy_lo; oy < oy_hi; ++oy) {
                            const T *xrow = xp + static_cast<std::size_t>(oy * s + ky - ph) * x.w;
                            const T *drow = dyp + static_cast<std::size_t>(oy) * ow;
                            for (int ox = ox_lo; ox < ox_hi; ++ox)
                                sum += static_cast<double>(xrow[ox * s + kx - pw]) *
                                       static_cast<double>(drow[ox]);
                        }
                    }
                    w.grad[(static_cast<std::size_t>(oc) * icg + j) * spec.kernel_h * spec.kernel_w +
                           ky * spec.kernel_w + kx] += static_cast<T>(sum);
                }
            }
        }
        if (spec.use_bias) {
            double sum = 0.0;
            for (int b = 0; b < x.n; ++b) {
                const T *dyp = dy.plane(b, oc);
                for (int i = 0; i < oh * ow; ++i) sum += static_cast<double>(dyp[i]);
            }
            tape.b->grad[oc] += static_cast<T>(sum);
        }
    }
    return dx;
}

// Scale-balanced uniform init, a = sqrt(6 / (fan_in + fan_out)).
template <class T>
void glorot_init(Param<T> &p, int fan_in, int fan_out, Rng &rng) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto &v : p.value) v = static_cast<T>(rng.uniform(-a, a));
}

template <class T>
void conv_init(Param<T> &w, const ConvSpec &spec, Rng &rng) {
    const int icg = spec.in_channels / spec.groups;
    const int ocg = spec.out_channels / spec.groups;
    glorot_init(w, icg * spec.kernel_h * spec.kernel_w, ocg * spec.kernel_h * spec.kernel_w, rng);
}

} // namespace msse
