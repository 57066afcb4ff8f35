#pragma once

#include <cstdint>

#include "msse/image.hpp"
#include "msse/rng.hpp"

namespace msse {

// Geometric + photometric jitter ranges. Dimensions are always preserved:
// crops are bilinearly resized back, rotations sample with edge replication.
struct AugmentSpec {
    double hflip_prob = 0.5;
    double vflip_prob = 0.5;
    double rotation_deg = 20.0;   // theta ~ U(-rotation_deg, rotation_deg)
    double crop_min_frac = 0.8;   // crop fraction ~ U(crop_min_frac, 1.0]
    double brightness_delta = 40; // delta ~ U(-brightness_delta, brightness_delta)
    double contrast_lo = 0.8;     // factor ~ U(contrast_lo, contrast_hi)
    double contrast_hi = 1.2;
    std::uint64_t seed = 0;       // base key for deterministic regeneration

    void validate() const;
};

ImageU8 hflip(const ImageU8 &img);
ImageU8 vflip(const ImageU8 &img);
ImageU8 rotate(const ImageU8 &img, double degrees);
ImageU8 crop_resize(const ImageU8 &img, double frac, double off_x, double off_y);
ImageU8 brightness(const ImageU8 &img, double delta);
ImageU8 contrast(const ImageU8 &img, double factor);

// Full jitter chain with parameters drawn from rng in a fixed order:
// hflip?, vflip?, rotate, crop+resize, brightness, contrast.
ImageU8 augment(const ImageU8 &img, const AugmentSpec &spec, Rng &rng);

// Deterministic per-epoch stream: the draw for (record, epoch) depends only
// on (spec.seed, epoch, record_id).
ImageU8 augment_keyed(const ImageU8 &img, const AugmentSpec &spec, int epoch,
                      std::uint64_t record_id);

} // namespace msse
