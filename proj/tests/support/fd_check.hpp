#pragma once

// Central finite-difference harness for the analytic-gradient checks.
// All checks run at 64-bit with h = 1e-5 * (1 + |x|).

#include <cmath>
#include <cstddef>
#include <vector>

#include "msse/params.hpp"
#include "msse/rng.hpp"
#include "msse/tensor.hpp"

namespace fd {

inline double rel_err(double analytic, double numeric) {
    return std::abs(analytic - numeric) /
           std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

// Perturbs every element of `buf` in place, re-evaluating `loss` (which must
// read through `buf`), and returns the worst disagreement with `analytic`.
template <class LossFn>
double max_rel_err(double *buf, std::size_t len, const double *analytic, LossFn &&loss) {
    double worst = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        const double orig = buf[i];
        const double h = 1e-5 * (1.0 + std::abs(orig));
        buf[i] = orig + h;
        const double lp = loss();
        buf[i] = orig - h;
        const double lm = loss();
        buf[i] = orig;
        worst = std::max(worst, rel_err(analytic[i], (lp - lm) / (2.0 * h)));
    }
    return worst;
}

template <class Ten>
void fill_uniform(Ten &t, msse::Rng &rng, double lo = -1.0, double hi = 1.0) {
    for (auto &v : t.data) v = rng.uniform(lo, hi);
}

inline void fill_uniform(std::vector<double> &v, msse::Rng &rng, double lo = -1.0,
                         double hi = 1.0) {
    for (auto &x : v) x = rng.uniform(lo, hi);
}

inline void fill_store(msse::ParamStore<double> &store, msse::Rng &rng, double lo = -1.0,
                       double hi = 1.0) {
    for (auto &p : store) fill_uniform(p.value, rng, lo, hi);
}

// Fixed projection so the scalar loss L = sum r_i * y_i exercises every output.
template <class Ten>
Ten random_projection(const Ten &like, msse::Rng &rng) {
    Ten r = like;
    fill_uniform(r, rng, -1.0, 1.0);
    return r;
}

template <class Ten>
double project(const Ten &y, const Ten &r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < y.data.size(); ++i) sum += y.data[i] * r.data[i];
    return sum;
}

} // namespace fd
