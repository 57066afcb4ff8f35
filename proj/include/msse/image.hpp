#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace msse {

// Interleaved 8-bit RGB image, row-major.
struct ImageU8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // 3 * width * height

    ImageU8() = default;
    ImageU8(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(3) * w * h, fill) {}

    std::uint8_t &at(int x, int y, int ch) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + ch];
    }
    std::uint8_t at(int x, int y, int ch) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + ch];
    }
    bool valid() const {
        return width > 0 && height > 0 &&
               pixels.size() == static_cast<std::size_t>(3) * width * height;
    }
};

// Binary PPM (P6, maxval 255). Anything else is a format error.
ImageU8 load_ppm(const std::string &path);
void save_ppm(const ImageU8 &image, const std::string &path);

} // namespace msse
