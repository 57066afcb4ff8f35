#include "msse/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace msse {

namespace {

std::uint8_t clamp_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
}

// Bilinear sample with edge replication.
double sample(const ImageU8 &img, double fx, double fy, int ch) {
    fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
    fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(fx);
    const int y0 = static_cast<int>(fy);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double ax = fx - x0;
    const double ay = fy - y0;
    const double top = img.at(x0, y0, ch) * (1 - ax) + img.at(x1, y0, ch) * ax;
    const double bot = img.at(x0, y1, ch) * (1 - ax) + img.at(x1, y1, ch) * ax;
    return top * (1 - ay) + bot * ay;
}

} // namespace

void AugmentSpec::validate() const {
    if (hflip_prob < 0 || hflip_prob > 1 || vflip_prob < 0 || vflip_prob > 1)
        throw std::invalid_argument("augment: flip probabilities must be in [0,1]");
    if (rotation_deg < 0 || rotation_deg > 20.0)
        throw std::invalid_argument("augment: rotation bound must be in [0, 20] degrees");
    if (crop_min_frac <= 0.0 || crop_min_frac > 1.0)
        throw std::invalid_argument("augment: crop fraction must be in (0, 1]");
    if (brightness_delta < 0) throw std::invalid_argument("augment: brightness_delta must be >= 0");
    if (contrast_lo <= 0 || contrast_hi < contrast_lo)
        throw std::invalid_argument("augment: contrast range is invalid");
}

ImageU8 hflip(const ImageU8 &img) {
    ImageU8 out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int ch = 0; ch < 3; ++ch) out.at(x, y, ch) = img.at(img.width - 1 - x, y, ch);
    return out;
}

ImageU8 vflip(const ImageU8 &img) {
    ImageU8 out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int ch = 0; ch < 3; ++ch) out.at(x, y, ch) = img.at(x, img.height - 1 - y, ch);
    return out;
}

ImageU8 rotate(const ImageU8 &img, double degrees) {
    if (degrees == 0.0) return img;
    const double rad = degrees * 3.14159265358979323846 / 180.0;
    const double ct = std::cos(rad);
    const double st = std::sin(rad);
    const double cx = (img.width - 1) * 0.5;
    const double cy = (img.height - 1) * 0.5;
    ImageU8 out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            const double fx = ct * dx + st * dy + cx;
            const double fy = -st * dx + ct * dy + cy;
            for (int ch = 0; ch < 3; ++ch) out.at(x, y, ch) = clamp_u8(sample(img, fx, fy, ch));
        }
    return out;
}

// Window of `frac` of each dimension anchored by offsets in [0,1], resized back.
ImageU8 crop_resize(const ImageU8 &img, double frac, double off_x, double off_y) {
    if (frac <= 0.0 || frac > 1.0) throw std::invalid_argument("crop_resize: bad fraction");
    if (frac == 1.0) return img;
    const int cw = std::max(1, static_cast<int>(std::lround(frac * img.width)));
    const int chh = std::max(1, static_cast<int>(std::lround(frac * img.height)));
    const int x0 = static_cast<int>(std::lround(off_x * (img.width - cw)));
    const int y0 = static_cast<int>(std::lround(off_y * (img.height - chh)));
    ImageU8 out(img.width, img.height);
    const double sx = static_cast<double>(cw) / img.width;
    const double sy = static_cast<double>(chh) / img.height;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double fx = x0 + (x + 0.5) * sx - 0.5;
            const double fy = y0 + (y + 0.5) * sy - 0.5;
            for (int ch = 0; ch < 3; ++ch) out.at(x, y, ch) = clamp_u8(sample(img, fx, fy, ch));
        }
    return out;
}

ImageU8 brightness(const ImageU8 &img, double delta) {
    ImageU8 out = img;
    for (auto &p : out.pixels) p = clamp_u8(p + delta);
    return out;
}

ImageU8 contrast(const ImageU8 &img, double factor) {
    ImageU8 out = img;
    for (auto &p : out.pixels) p = clamp_u8(128.0 + factor * (p - 128.0));
    return out;
}

ImageU8 augment(const ImageU8 &img, const AugmentSpec &spec, Rng &rng) {
    spec.validate();
    // fixed draw order keeps the stream reproducible
    const bool do_h = rng.uniform() < spec.hflip_prob;
    const bool do_v = rng.uniform() < spec.vflip_prob;
    const double theta = rng.uniform(-spec.rotation_deg, spec.rotation_deg);
    const double frac = rng.uniform(spec.crop_min_frac, 1.0);
    const double off_x = rng.uniform();
    const double off_y = rng.uniform();
    const double delta = rng.uniform(-spec.brightness_delta, spec.brightness_delta);
    const double factor = rng.uniform(spec.contrast_lo, spec.contrast_hi);

    ImageU8 out = img;
    if (do_h) out = hflip(out);
    if (do_v) out = vflip(out);
    out = rotate(out, theta);
    out = crop_resize(out, frac, off_x, off_y);
    out = brightness(out, delta);
    return contrast(out, factor);
}

ImageU8 augment_keyed(const ImageU8 &img, const AugmentSpec &spec, int epoch,
                      std::uint64_t record_id) {
    Rng rng(mix(spec.seed, 0x61756758ull, static_cast<std::uint64_t>(epoch), record_id));
    return augment(img, spec, rng);
}

} // namespace msse
