#pragma once

#include <cstdint>

#include "msse/image.hpp"

namespace msse {

// 64-bit perceptual hash: Rec.601 grayscale, bilinear resize to 32x32,
// orthonormal 2-D DCT-II, top-left 8x8 coefficient block, threshold at the
// block median (mean of the two middle order statistics, DC included).
// Bit i (LSB = coefficient (0,0)) is set iff coefficient i > median.
std::uint64_t phash64(const ImageU8 &image);

// Popcount of XOR, in [0, 64].
int hamming(std::uint64_t a, std::uint64_t b);

// 1 - hamming/64.
double phash_similarity(std::uint64_t a, std::uint64_t b);

} // namespace msse
