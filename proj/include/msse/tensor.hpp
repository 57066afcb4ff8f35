#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace msse {

namespace detail {
inline void check_dims4(int n, int c, int h, int w) {
    if (n < 1 || c < 1 || h < 1 || w < 1) {
        throw std::invalid_argument("Tensor4: every shape component must be >= 1, got (" +
                                    std::to_string(n) + "," + std::to_string(c) + "," +
                                    std::to_string(h) + "," + std::to_string(w) + ")");
    }
}
} // namespace detail

// Dense (batch, channel, row, col) array, contiguous in that order.
// Element (b,ch,y,x) lives at offset ((b*c + ch)*h + y)*w + x.
template <class T>
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    Tensor4() = default;

    Tensor4(int n_, int c_, int h_, int w_, T fill = T(0)) : n(n_), c(c_), h(h_), w(w_) {
        detail::check_dims4(n_, c_, h_, w_);
        data.assign(static_cast<std::size_t>(n) * c * h * w, fill);
    }

    std::size_t size() const { return data.size(); }
    int plane_size() const { return h * w; }

    bool same_shape(const Tensor4 &o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    std::size_t offset(int b, int ch, int y, int x) const {
        return ((static_cast<std::size_t>(b) * c + ch) * h + y) * w + x;
    }

    T &at(int b, int ch, int y, int x) { return data[offset(b, ch, y, x)]; }
    const T &at(int b, int ch, int y, int x) const { return data[offset(b, ch, y, x)]; }

    T *plane(int b, int ch) { return data.data() + offset(b, ch, 0, 0); }
    const T *plane(int b, int ch) const { return data.data() + offset(b, ch, 0, 0); }

    std::string shape_str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) +
               "," + std::to_string(w) + ")";
    }
};

// Row-major (rows, cols) matrix; FC activations, logits, confusion counts.
template <class T>
struct Tensor2 {
    int rows = 0, cols = 0;
    std::vector<T> data;

    Tensor2() = default;

    Tensor2(int rows_, int cols_, T fill = T(0)) : rows(rows_), cols(cols_) {
        if (rows_ < 1 || cols_ < 1)
            throw std::invalid_argument("Tensor2: shape components must be >= 1");
        data.assign(static_cast<std::size_t>(rows) * cols, fill);
    }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Tensor2 &o) const { return rows == o.rows && cols == o.cols; }

    T &at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    const T &at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    T *row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const T *row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
};

template <class T>
Tensor4<T> new_filled(int n, int c, int h, int w, T value) {
    return Tensor4<T>(n, c, h, w, value);
}

namespace detail {
template <class T>
void require_same_shape(const Tensor4<T> &a, const Tensor4<T> &b, const char *op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
}
} // namespace detail

template <class T>
Tensor4<T> ew_add(const Tensor4<T> &a, const Tensor4<T> &b) {
    detail::require_same_shape(a, b, "ew_add");
    Tensor4<T> out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

template <class T>
Tensor4<T> ew_mul(const Tensor4<T> &a, const Tensor4<T> &b) {
    detail::require_same_shape(a, b, "ew_mul");
    Tensor4<T> out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

template <class T>
Tensor4<T> scale(const Tensor4<T> &a, T s) {
    Tensor4<T> out = a;
    for (auto &v : out.data) v *= s;
    return out;
}

// Stacks parts along the channel axis; part i occupies the channel band right
// after parts 0..i-1. Batch and spatial dims must agree.
template <class T>
Tensor4<T> concat_channels(const std::vector<const Tensor4<T> *> &parts) {
    if (parts.empty()) throw std::invalid_argument("concat_channels: empty part list");
    const Tensor4<T> &first = *parts[0];
    int total_c = 0;
    for (const Tensor4<T> *p : parts) {
        if (p->n != first.n || p->h != first.h || p->w != first.w)
            throw std::invalid_argument("concat_channels: batch/spatial mismatch " +
                                        first.shape_str() + " vs " + p->shape_str());
        total_c += p->c;
    }
    Tensor4<T> out(first.n, total_c, first.h, first.w);
    for (int b = 0; b < first.n; ++b) {
        int ch0 = 0;
        for (const Tensor4<T> *p : parts) {
            std::copy(p->plane(b, 0), p->plane(b, 0) + static_cast<std::size_t>(p->c) * p->h * p->w,
                      out.plane(b, ch0));
            ch0 += p->c;
        }
    }
    return out;
}

template <class T>
Tensor4<T> concat_channels(const Tensor4<T> &a, const Tensor4<T> &b) {
    return concat_channels<T>({&a, &b});
}

// Copies the contiguous channel band [c0, c0+count) into its own tensor.
template <class T>
Tensor4<T> slice_channels(const Tensor4<T> &x, int c0, int count) {
    if (c0 < 0 || count < 1 || c0 + count > x.c)
        throw std::invalid_argument("slice_channels: band [" + std::to_string(c0) + "," +
                                    std::to_string(c0 + count) + ") outside " + x.shape_str());
    Tensor4<T> out(x.n, count, x.h, x.w);
    for (int b = 0; b < x.n; ++b)
        std::copy(x.plane(b, c0), x.plane(b, c0) + static_cast<std::size_t>(count) * x.h * x.w,
                  out.plane(b, 0));
    return out;
}

// Per-pixel mean and max over the channel axis; argmax (first winner on ties)
// is kept so the max path can be differentiated.
template <class T>
struct ChannelStats {
    Tensor4<T> avg;           // (n,1,h,w)
    Tensor4<T> max;           // (n,1,h,w)
    std::vector<int> argmax;  // winning channel per (b,y,x)
};

template <class T>
ChannelStats<T> channel_stats(const Tensor4<T> &x) {
    ChannelStats<T> s;
    s.avg = Tensor4<T>(x.n, 1, x.h, x.w);
    s.max = Tensor4<T>(x.n, 1, x.h, x.w);
    s.argmax.assign(static_cast<std::size_t>(x.n) * x.h * x.w, 0);
    const int hw = x.h * x.w;
    for (int b = 0; b < x.n; ++b) {
        T *avg_p = s.avg.plane(b, 0);
        T *max_p = s.max.plane(b, 0);
        int *arg_p = s.argmax.data() + static_cast<std::size_t>(b) * hw;
        for (int p = 0; p < hw; ++p) {
            double sum = 0.0;
            T best = x.plane(b, 0)[p];
            int best_ch = 0;
            for (int ch = 0; ch < x.c; ++ch) {
                T v = x.plane(b, ch)[p];
                sum += static_cast<double>(v);
                if (v > best) {
                    best = v;
                    best_ch = ch;
                }
            }
            avg_p[p] = static_cast<T>(sum / x.c);
            max_p[p] = best;
            arg_p[p] = best_ch;
        }
    }
    return s;
}

template <class T>
Tensor4<T> channel_stats_backward(const Tensor4<T> &davg, const Tensor4<T> &dmax,
                                  const ChannelStats<T> &stats, int channels) {
    const Tensor4<T> &ref = stats.avg;
    if (!davg.same_shape(ref) || !dmax.same_shape(ref))
        throw std::invalid_argument("channel_stats_backward: gradient shape mismatch");
    Tensor4<T> dx(ref.n, channels, ref.h, ref.w);
    const int hw = ref.h * ref.w;
    for (int b = 0; b < ref.n; ++b) {
        const T *da = davg.plane(b, 0);
        const T *dm = dmax.plane(b, 0);
        const int *arg_p = stats.argmax.data() + static_cast<std::size_t>(b) * hw;
        for (int p = 0; p < hw; ++p) {
            T spread = da[p] / static_cast<T>(channels);
            for (int ch = 0; ch < channels; ++ch) dx.plane(b, ch)[p] += spread;
            dx.plane(b, arg_p[p])[p] += dm[p];
        }
    }
    return dx;
}

} // namespace msse
