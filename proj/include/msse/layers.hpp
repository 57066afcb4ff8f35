#pragma once

#include <cmath>
#include <limits>
#include <type_traits>
#include <utility>
#include <vector>

#include "msse/conv.hpp"
#include "msse/params.hpp"
#include "msse/rng.hpp"
#include "msse/tensor.hpp"

namespace msse {

// ---------------------------------------------------------------------------
// Elementwise activations (work on Tensor2 and Tensor4 alike).

template <class Ten>
struct EwTape {
    Ten ref; // relu keeps the input, sigmoid keeps the output
};

template <class Ten>
Ten relu_forward(const Ten &x, EwTape<Ten> *tape = nullptr) {
    Ten y = x;
    for (auto &v : y.data)
        if (v < 0) v = 0;
    if (tape) tape->ref = x;
    return y;
}

// Derivative is 1 where the forward input was > 0, else 0.
template <class Ten>
Ten relu_backward(const Ten &dy, const EwTape<Ten> &tape) {
    Ten dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
        if (!(tape.ref.data[i] > 0)) dx.data[i] = 0;
    return dx;
}

template <class Ten>
Ten sigmoid_forward(const Ten &x, EwTape<Ten> *tape = nullptr) {
    using S = std::remove_reference_t<decltype(x.data[0])>;
    Ten y = x;
    for (auto &v : y.data)
        v = static_cast<S>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
    if (tape) tape->ref = y;
    return y;
}

template <class Ten>
Ten sigmoid_backward(const Ten &dy, const EwTape<Ten> &tape) {
    Ten dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i) {
        auto s = tape.ref.data[i];
        dx.data[i] *= s * (1 - s);
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Global average pooling: (n,c,h,w) -> (n,c).

struct GapTape {
    int n = 0, c = 0, h = 0, w = 0;
};

template <class T>
Tensor2<T> global_avg_pool_forward(const Tensor4<T> &x, GapTape *tape = nullptr) {
    Tensor2<T> v(x.n, x.c);
    const int hw = x.h * x.w;
    for (int b = 0; b < x.n; ++b)
        for (int ch = 0; ch < x.c; ++ch) {
            const T *p = x.plane(b, ch);
            double sum = 0.0;
            for (int i = 0; i < hw; ++i) sum += static_cast<double>(p[i]);
            v.at(b, ch) = static_cast<T>(sum / hw);
        }
    if (tape) *tape = {x.n, x.c, x.h, x.w};
    return v;
}

template <class T>
Tensor4<T> global_avg_pool_backward(const Tensor2<T> &dv, const GapTape &tape) {
    if (dv.rows != tape.n || dv.cols != tape.c)
        throw std::invalid_argument("global_avg_pool_backward: gradient shape mismatch");
    Tensor4<T> dx(tape.n, tape.c, tape.h, tape.w);
    const T inv = T(1) / static_cast<T>(tape.h * tape.w);
    for (int b = 0; b < tape.n; ++b)
        for (int ch = 0; ch < tape.c; ++ch) {
            const T g = dv.at(b, ch) * inv;
            T *p = dx.plane(b, ch);
            for (int i = 0; i < tape.h * tape.w; ++i) p[i] = g;
        }
    return dx;
}

// ---------------------------------------------------------------------------
// Average pooling, exact tiling (used by the transition layers with k = s = 2).

struct AvgPoolTape {
    int n = 0, c = 0, h = 0, w = 0, k = 0, s = 0;
};

template <class T>
Tensor4<T> avg_pool2d_forward(const Tensor4<T> &x, int k = 2, int s = 2,
                              AvgPoolTape *tape = nullptr) {
    if (k < 1 || s < 1) throw std::invalid_argument("avg_pool2d: k and s must be >= 1");
    if ((x.h - k) % s != 0 || (x.w - k) % s != 0 || x.h < k || x.w < k)
        throw std::invalid_argument("avg_pool2d: input " + x.shape_str() +
                                    " does not tile exactly with k=" + std::to_string(k) +
                                    " s=" + std::to_string(s));
    const int oh = (x.h - k) / s + 1;
    const int ow = (x.w - k) / s + 1;
    Tensor4<T> y(x.n, x.c, oh, ow);
    for (int b = 0; b < x.n; ++b)
        for (int ch = 0; ch < x.c; ++ch) {
            const T *xp = x.plane(b, ch);
            T *yp = y.plane(b, ch);
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double sum = 0.0;
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx)
                            sum += static_cast<double>(
                                xp[static_cast<std::size_t>(oy * s + ky) * x.w + ox * s + kx]);
                    yp[static_cast<std::size_t>(oy) * ow + ox] = static_cast<T>(sum / (k * k));
                }
        }
    if (tape) *tape = {x.n, x.c, x.h, x.w, k, s};
    return y;
}

template <class T>
Tensor4<T> avg_pool2d_backward(const Tensor4<T> &dy, const AvgPoolTape &tape) {
    const int oh = (tape.h - tape.k) / tape.s + 1;
    const int ow = (tape.w - tape.k) / tape.s + 1;
    if (dy.n != tape.n || dy.c != tape.c || dy.h != oh || dy.w != ow)
        throw std::invalid_argument("avg_pool2d_backward: gradient shape mismatch");
    Tensor4<T> dx(tape.n, tape.c, tape.h, tape.w);
    const T inv = T(1) / static_cast<T>(tape.k * tape.k);
    for (int b = 0; b < tape.n; ++b)
        for (int ch = 0; ch < tape.c; ++ch) {
            const T *dyp = dy.plane(b, ch);
            T *dxp = dx.plane(b, ch);
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    const T g = dyp[static_cast<std::size_t>(oy) * ow + ox] * inv;
                    for (int ky = 0; ky < tape.k; ++ky)
                        for (int kx = 0; kx < tape.k; ++kx)
                            dxp[static_cast<std::size_t>(oy * tape.s + ky) * tape.w + ox * tape.s +
                                kx] += g;
                }
        }
    return dx;
}

// ---------------------------------------------------------------------------
// Max pooling with "same"-style zero padding (stem uses k = 3, s = 2).
// Backward routes the upstream gradient to the first row-major argmax cell;
// if a padding zero wins the window, the gradient for that output is dropped.

struct MaxPoolTape {
    int n = 0, c = 0, h = 0, w = 0, k = 0, s = 0;
    std::vector<int> argmax; // linear plane index of the winner, -1 if padding won
};

template <class T>
Tensor4<T> max_pool2d_forward(const Tensor4<T> &x, int k = 3, int s = 2,
                              MaxPoolTape *tape = nullptr) {
    if (k < 1 || s < 1) throw std::invalid_argument("max_pool2d: k and s must be >= 1");
    const int oh = conv_same_out(x.h, s);
    const int ow = conv_same_out(x.w, s);
    const int ph = conv_same_pad(x.h, k, s);
    const int pw = conv_same_pad(x.w, k, s);
    Tensor4<T> y(x.n, x.c, oh, ow);
    if (tape) {
        *tape = {x.n, x.c, x.h, x.w, k, s, {}};
        tape->argmax.assign(static_cast<std::size_t>(x.n) * x.c * oh * ow, -1);
    }
    for (int b = 0; b < x.n; ++b)
        for (int ch = 0; ch < x.c; ++ch) {
            const T *xp = x.plane(b, ch);
            T *yp = y.plane(b, ch);
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    T best = std::numeric_limits<T>::lowest();
                    int best_idx = -1;
                    bool window_has_pad = false;
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const int iy = oy * s + ky - ph;
                            const int ix = ox * s + kx - pw;
                            if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) {
                                window_has_pad = true;
                                continue;
                            }
                            const T v = xp[static_cast<std::size_t>(iy) * x.w + ix];
                            if (best_idx < 0 || v > best) {
                                best = v;
                                best_idx = iy * x.w + ix;
                            }
                        }
                    if (window_has_pad && (best_idx < 0 || T(0) > best)) {
                        best = T(0);
                        best_idx = -1;
                    }
                    yp[static_cast<std::size_t>(oy) * ow + ox] = best;
                    if (tape)
                        tape->argmax[((static_cast<std::size_t>(b) * x.c + ch) * oh + oy) * ow + ox] =
                            best_idx;
                }
        }
    return y;
}

template <class T>
Tensor4<T> max_pool2d_backward(const Tensor4<T> &dy, const MaxPoolTape &tape) {
    const int oh = conv_same_out(tape.h, tape.s);
    const int ow = conv_same_out(tape.w, tape.s);
    if (dy.n != tape.n || dy.c != tape.c || dy.h != oh || dy.w != ow)
        throw std::invalid_argument("max_pool2d_backward: gradient shape mismatch");
    Tensor4<T> dx(tape.n, tape.c, tape.h, tape.w);
    for (int b = 0; b < tape.n; ++b)
        for (int ch = 0; ch < tape.c; ++ch) {
            const T *dyp = dy.plane(b, ch);
            T *dxp = dx.plane(b, ch);
            for (int i = 0; i < oh * ow; ++i) {
                const int idx =
                    tape.argmax[((static_cast<std::size_t>(b) * tape.c + ch) * oh) * ow + i];
                if (idx >= 0) dxp[idx] += dyp[i];
            }
        }
    return dx;
}

// ---------------------------------------------------------------------------
// Fully connected: logits = v * W + b, W is (in, out) row-major.

template <class T>
struct DenseTape {
    Tensor2<T> v;
    Param<T> *w = nullptr;
    Param<T> *b = nullptr;
};

template <class T>
Tensor2<T> dense_forward(const Tensor2<T> &v, Param<T> &w, Param<T> *bias,
                         DenseTape<T> *tape = nullptr) {
    if (w.dims.size() != 2 || w.dims[0] != v.cols)
        throw std::invalid_argument("dense: input has " + std::to_string(v.cols) +
                                    " features, weight expects " +
                                    std::to_string(w.dims.empty() ? -1 : w.dims[0]));
    const int out = w.dims[1];
    Tensor2<T> y(v.rows, out);
    for (int r = 0; r < v.rows; ++r) {
        const T *vr = v.row(r);
        for (int o = 0; o < out; ++o) {
            double sum = bias ? static_cast<double>(bias->value[o]) : 0.0;
            for (int i = 0; i < v.cols; ++i)
                sum += static_cast<double>(vr[i]) *
                       static_cast<double>(w.value[static_cast<std::size_t>(i) * out + o]);
            y.at(r, o) = static_cast<T>(sum);
        }
    }
    if (tape) {
        tape->v = v;
        tape->w = &w;
        tape->b = bias;
    }
    return y;
}

template <class T>
Tensor2<T> dense_backward(const Tensor2<T> &dy, const DenseTape<T> &tape) {
    if (!tape.w) throw std::invalid_argument("dense_backward: tape was not filled by a forward");
    const Tensor2<T> &v = tape.v;
    Param<T> &w = *tape.w;
    const int out = w.dims[1];
    if (dy.rows != v.rows || dy.cols != out)
        throw std::invalid_argument("dense_backward: gradient shape mismatch");
    Tensor2<T> dv(v.rows, v.cols);
    for (int r = 0; r < v.rows; ++r)
        for (int i = 0; i < v.cols; ++i) {
            double sum = 0.0;
            for (int o = 0; o < out; ++o)
                sum += static_cast<double>(dy.at(r, o)) *
                       static_cast<double>(w.value[static_cast<std::size_t>(i) * out + o]);
            dv.at(r, i) = static_cast<T>(sum);
        }
    for (int i = 0; i < v.cols; ++i)
        for (int o = 0; o < out; ++o) {
            double sum = 0.0;
            for (int r = 0; r < v.rows; ++r)
                sum += static_cast<double>(v.at(r, i)) * static_cast<double>(dy.at(r, o));
            w.grad[static_cast<std::size_t>(i) * out + o] += static_cast<T>(sum);
        }
    if (tape.b)
        for (int o = 0; o < out; ++o) {
            double sum = 0.0;
            for (int r = 0; r < v.rows; ++r) sum += static_cast<double>(dy.at(r, o));
            tape.b->grad[o] += static_cast<T>(sum);
        }
    return dv;
}

// ---------------------------------------------------------------------------
// Inverted dropout: kept elements are scaled by 1/(1-p) so inference is a
// pure passthrough.

template <class T>
struct DropoutTape {
    bool passthrough = true;
    Tensor4<T> mult; // 0 or 1/(1-p) per element
};

template <class T>
Tensor4<T> dropout_forward(const Tensor4<T> &x, double p, bool train, Rng &rng,
                           DropoutTape<T> *tape = nullptr) {
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
    if (!train || p == 0.0) {
        if (tape) tape->passthrough = true;
        return x;
    }
    const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
    Tensor4<T> mult(x.n, x.c, x.h, x.w);
    for (auto &m : mult.data) m = rng.uniform() >= p ? keep_scale : T(0);
    Tensor4<T> y = ew_mul(x, mult);
    if (tape) {
        tape->passthrough = false;
        tape->mult = std::move(mult);
    }
    return y;
}

template <class T>
Tensor4<T> dropout_backward(const Tensor4<T> &dy, const DropoutTape<T> &tape) {
    if (tape.passthrough) return dy;
    return ew_mul(dy, tape.mult);
}

// ---------------------------------------------------------------------------
// Row-wise softmax + mean cross-entropy over the batch.

template <class T>
struct SoftmaxXentTape {
    Tensor2<T> probs;
    std::vector<int> labels;
};

template <class T>
struct SoftmaxXentResult {
    double loss = 0.0;
    Tensor2<T> probs;
};

template <class T>
SoftmaxXentResult<T> softmax_xent_forward(const Tensor2<T> &logits, const std::vector<int> &labels,
                                          SoftmaxXentTape<T> *tape = nullptr) {
    if (static_cast<int>(labels.size()) != logits.rows)
        throw std::invalid_argument("softmax_xent: one label per logits row required");
    for (int l : labels)
        if (l < 0 || l >= logits.cols)
            throw std::invalid_argument("softmax_xent: label " + std::to_string(l) +
                                        " outside [0," + std::to_string(logits.cols) + ")");
    Tensor2<T> probs(logits.rows, logits.cols);
    double loss = 0.0;
    for (int r = 0; r < logits.rows; ++r) {
        const T *lr = logits.row(r);
        double mx = static_cast<double>(lr[0]);
        for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, static_cast<double>(lr[c]));
        double denom = 0.0;
        for (int c = 0; c < logits.cols; ++c) denom += std::exp(static_cast<double>(lr[c]) - mx);
        for (int c = 0; c < logits.cols; ++c)
            probs.at(r, c) = static_cast<T>(std::exp(static_cast<double>(lr[c]) - mx) / denom);
        loss -= std::log(std::exp(static_cast<double>(lr[labels[r]]) - mx) / denom);
    }
    loss /= logits.rows;
    if (tape) {
        tape->probs = probs;
        tape->labels = labels;
    }
    return {loss, std::move(probs)};
}

// dlogits = upstream * (probs - onehot) / n
template <class T>
Tensor2<T> softmax_xent_backward(const SoftmaxXentTape<T> &tape, double upstream = 1.0) {
    Tensor2<T> dl = tape.probs;
    const double inv_n = upstream / dl.rows;
    for (int r = 0; r < dl.rows; ++r) {
        for (int c = 0; c < dl.cols; ++c) dl.at(r, c) = static_cast<T>(dl.at(r, c) * inv_n);
        dl.at(r, tape.labels[r]) -= static_cast<T>(inv_n);
    }
    return dl;
}

} // namespace msse
