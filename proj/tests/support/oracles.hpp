#pragma once

// Independent reference implementations the real code is checked against.
// Everything here is deliberately written the slow, obvious way.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "msse/conv.hpp"
#include "msse/phash.hpp"
#include "msse/tensor.hpp"

namespace oracle {

// Direct six-loop cross-correlation with "same" zero padding, grouped.
inline msse::Tensor4<double> naive_conv2d(const msse::Tensor4<double> &x,
                                          const msse::ConvSpec &spec,
                                          const std::vector<double> &w,
                                          const std::vector<double> &bias) {
    const int icg = spec.in_channels / spec.groups;
    const int ocg = spec.out_channels / spec.groups;
    const int oh = msse::conv_same_out(x.h, spec.stride);
    const int ow = msse::conv_same_out(x.w, spec.stride);
    const int ph = msse::conv_same_pad(x.h, spec.kernel_h, spec.stride);
    const int pw = msse::conv_same_pad(x.w, spec.kernel_w, spec.stride);
    msse::Tensor4<double> y(x.n, spec.out_channels, oh, ow);
    for (int b = 0; b < x.n; ++b)
        for (int oc = 0; oc < spec.out_channels; ++oc)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = 0.0;
                    const int g = oc / ocg;
                    for (int j = 0; j < icg; ++j)
                        for (int ky = 0; ky < spec.kernel_h; ++ky)
                            for (int kx = 0; kx < spec.kernel_w; ++kx) {
                                const int iy = oy * spec.stride + ky - ph;
                                const int ix = ox * spec.stride + kx - pw;
                                if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                                const double wv =
                                    w[(static_cast<std::size_t>(oc) * icg + j) * spec.kernel_h *
                                          spec.kernel_w +
                                      static_cast<std::size_t>(ky) * spec.kernel_w + kx];
                                acc += wv * x.at(b, g * icg + j, iy, ix);
                            }
                    if (spec.use_bias) acc += bias[static_cast<std::size_t>(oc)];
                    y.at(b, oc, oy, ox) = acc;
                }
    return y;
}

// Per-class tallies counted sample by sample.
struct ClassCounts {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline std::vector<ClassCounts> count_ovr(const std::vector<int> &truth,
                                          const std::vector<int> &pred, int k) {
    std::vector<ClassCounts> out(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c)
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const bool is_true = truth[i] == c;
            const bool is_pred = pred[i] == c;
            auto &cc = out[static_cast<std::size_t>(c)];
            if (is_true && is_pred) ++cc.tp;
            else if (!is_true && is_pred) ++cc.fp;
            else if (is_true && !is_pred) ++cc.fn;
            else ++cc.tn;
        }
    return out;
}

// AUC as P(score_pos > score_neg) + 0.5 * P(tie), all pairs compared.
inline double pairwise_auc(const std::vector<double> &scores, const std::vector<bool> &positive) {
    double wins = 0.0;
    std::int64_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!positive[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (positive[j]) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

// AP by brute-force counting at every distinct threshold, descending.
inline double sweep_ap(const std::vector<double> &scores, const std::vector<bool> &positive) {
    std::vector<double> thresholds = scores;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    std::int64_t total_pos = 0;
    for (bool p : positive) total_pos += p ? 1 : 0;
    double ap = 0.0, prev_recall = 0.0;
    for (double t : thresholds) {
        std::int64_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (scores[i] >= t) (positive[i] ? tp : fp)++;
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

// Greedy retain-if-far-enough scan over hashes, quadratic and literal.
inline std::vector<std::size_t> greedy_dedup(const std::vector<std::uint64_t> &hashes,
                                             double tau) {
    std::vector<std::size_t> retained;
    for (std::size_t i = 0; i < hashes.size(); ++i) {
        bool keep = true;
        for (std::size_t kept : retained)
            if (msse::phash_similarity(hashes[i], hashes[kept]) >= tau) {
                keep = false;
                break;
            }
        if (keep) retained.push_back(i);
    }
    return retained;
}

} // namespace oracle
