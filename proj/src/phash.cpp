#include "msse/phash.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <vector>

namespace msse {

namespace {

constexpr int kResize = 32;
constexpr int kBlock = 8;

std::vector<double> to_gray(const ImageU8 &img) {
    std::vector<double> g(static_cast<std::size_t>(img.width) * img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            g[static_cast<std::size_t>(y) * img.width + x] = 0.299 * img.at(x, y, 0) +
                                                             0.587 * img.at(x, y, 1) +
                                                             0.114 * img.at(x, y, 2);
    return g;
}

// Center-aligned bilinear resample with edge clamping.
std::array<double, kResize * kResize> resize32(const std::vector<double> &g, int w, int h) {
    std::array<double, kResize * kResize> out{};
    const double sx = static_cast<double>(w) / kResize;
    const double sy = static_cast<double>(h) / kResize;
    for (int y = 0; y < kResize; ++y)
        for (int x = 0; x < kResize; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            double fy = (y + 0.5) * sy - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
            fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
            const int x0 = static_cast<int>(fx);
            const int y0 = static_cast<int>(fy);
            const int x1 = std::min(x0 + 1, w - 1);
            const int y1 = std::min(y0 + 1, h - 1);
            const double ax = fx - x0;
            const double ay = fy - y0;
            const double top = g[static_cast<std::size_t>(y0) * w + x0] * (1 - ax) +
                               g[static_cast<std::size_t>(y0) * w + x1] * ax;
            const double bot = g[static_cast<std::size_t>(y1) * w + x0] * (1 - ax) +
                               g[static_cast<std::size_t>(y1) * w + x1] * ax;
            out[static_cast<std::size_t>(y) * kResize + x] = top * (1 - ay) + bot * ay;
        }
    return out;
}

// Orthonormal DCT-II along both axes.
std::array<double, kResize * kResize> dct2d(const std::array<double, kResize * kResize> &g) {
    static const std::array<double, kResize * kResize> basis = [] {
        std::array<double, kResize * kResize> b{};
        for (int k = 0; k < kResize; ++k)
            for (int i = 0; i < kResize; ++i)
                b[static_cast<std::size_t>(k) * kResize + i] =
                    std::cos((2.0 * i + 1.0) * k * 3.14159265358979323846 / (2.0 * kResize));
        return b;
    }();
    const double a0 = std::sqrt(1.0 / kResize);
    const double ak = std::sqrt(2.0 / kResize);

    std::array<double, kResize * kResize> rows{};
    for (int y = 0; y < kResize; ++y)
        for (int k = 0; k < kResize; ++k) {
            double sum = 0.0;
            for (int i = 0; i < kResize; ++i)
                sum += g[static_cast<std::size_t>(y) * kResize + i] *
                       basis[static_cast<std::size_t>(k) * kResize + i];
            rows[static_cast<std::size_t>(y) * kResize + k] = (k == 0 ? a0 : ak) * sum;
        }
    std::array<double, kResize * kResize> out{};
    for (int k = 0; k < kResize; ++k)
        for (int x = 0; x < kResize; ++x) {
            double sum = 0.0;
            for (int i = 0; i < kResize; ++i)
                sum += rows[static_cast<std::size_t>(i) * kResize + x] *
                       basis[static_cast<std::size_t>(k) * kResize + i];
            out[static_cast<std::size_t>(k) * kResize + x] = (k == 0 ? a0 : ak) * sum;
        }
    return out;
}

} // namespace

std::uint64_t phash64(const ImageU8 &image) {
    if (!image.valid()) throw std::invalid_argument("phash64: invalid image");
    const auto coeffs = dct2d(resize32(to_gray(image), image.width, image.height));

    std::array<double, kBlock * kBlock> block{};
    for (int r = 0; r < kBlock; ++r)
        for (int c = 0; c < kBlock; ++c)
            block[static_cast<std::size_t>(r) * kBlock + c] =
                coeffs[static_cast<std::size_t>(r) * kResize + c];

    auto sorted = block;
    std::sort(sorted.begin(), sorted.end());
    const double median = 0.5 * (sorted[kBlock * kBlock / 2 - 1] + sorted[kBlock * kBlock / 2]);

    std::uint64_t hash = 0;
    for (int i = 0; i < kBlock * kBlock; ++i)
        if (block[static_cast<std::size_t>(i)] > median) hash |= std::uint64_t(1) << i;
    return hash;
}

int hamming(std::uint64_t a, std::uint64_t b) { return std::popcount(a ^ b); }

double phash_similarity(std::uint64_t a, std::uint64_t b) {
    return 1.0 - hamming(a, b) / 64.0;
}

} // namespace msse
