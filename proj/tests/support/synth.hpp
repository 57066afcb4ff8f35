#pragma once

// Synthetic nine-class texture corpus: oriented sinusoidal gratings, one
// (orientation, frequency) pair per class, with phase, amplitude, offset and
// pixel noise as nuisance factors.

#include <cmath>
#include <string>
#include <vector>

#include "msse/image.hpp"
#include "msse/rng.hpp"
#include "msse/tensor.hpp"
#include "msse/trainer.hpp"

namespace synth {

struct ToyDataset {
    std::vector<msse::ImageU8> images;
    std::vector<int> labels;
};

inline msse::ImageU8 grating(int size, int klass, msse::Rng &rng) {
    const double orientations[3] = {0.0, 1.0471975511965976, 2.0943951023931953}; // 0/60/120 deg
    const double frequencies[3] = {0.08, 0.18, 0.32};
    const double theta = orientations[klass % 3];
    const double freq = frequencies[klass / 3];
    const double amp = rng.uniform(35.0, 60.0);
    const double phase = rng.uniform(0.0, 6.283185307179586);
    const double offset = 128.0 + rng.uniform(-15.0, 15.0);
    const double ct = std::cos(theta), st = std::sin(theta);

    msse::ImageU8 img(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double u = ct * x + st * y;
            const double v = offset + amp * std::sin(6.283185307179586 * freq * u + phase) +
                             rng.normal() * 12.0;
            const auto pix = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
            for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = pix;
        }
    return img;
}

inline ToyDataset make_grating_dataset(int size, int per_class, std::uint64_t seed) {
    ToyDataset ds;
    for (int klass = 0; klass < 9; ++klass) {
        msse::Rng rng(msse::mix(seed, 0x67726174ull, static_cast<std::uint64_t>(klass)));
        for (int i = 0; i < per_class; ++i) {
            ds.images.push_back(grating(size, klass, rng));
            ds.labels.push_back(klass);
        }
    }
    return ds;
}

// SampleProvider over in-memory images; epoch-invariant.
class MemoryProvider : public msse::SampleProvider {
public:
    explicit MemoryProvider(const ToyDataset &ds) : ds_(ds) {}

    std::size_t count() const override { return ds_.images.size(); }

    msse::Tensor4<float> image(std::size_t record, int) override {
        const msse::ImageU8 &img = ds_.images[record];
        msse::Tensor4<float> t(1, 3, img.height, img.width);
        for (int ch = 0; ch < 3; ++ch) {
            float *p = t.plane(0, ch);
            for (int y = 0; y < img.height; ++y)
                for (int x = 0; x < img.width; ++x)
                    p[static_cast<std::size_t>(y) * img.width + x] =
                        static_cast<float>(img.at(x, y, ch)) / 255.0f;
        }
        return t;
    }

    bool epoch_varying(std::size_t) const override { return false; }

private:
    const ToyDataset &ds_;
};

// Deterministic index split: first train_frac of each class to train, next
// val_frac to val, remainder test (records are generated class-contiguous).
inline msse::FitData split_dataset(const ToyDataset &ds, double train_frac, double val_frac) {
    msse::FitData data;
    data.labels = ds.labels;
    std::vector<std::vector<std::size_t>> per_class(9);
    for (std::size_t i = 0; i < ds.labels.size(); ++i)
        per_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    for (const auto &members : per_class) {
        const auto n_train = static_cast<std::size_t>(train_frac * members.size());
        const auto n_val = static_cast<std::size_t>(val_frac * members.size());
        for (std::size_t i = 0; i < members.size(); ++i) {
            if (i < n_train) data.train.push_back(members[i]);
            else if (i < n_train + n_val) data.val.push_back(members[i]);
        }
    }
    return data;
}

} // namespace synth
