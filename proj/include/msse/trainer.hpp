#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "msse/backbone.hpp"
#include "msse/layers.hpp"
#include "msse/manifest.hpp"
#include "msse/rng.hpp"

namespace msse {

struct TrainConfig {
    int batch_size = 64;
    int epochs = 30;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 42;
    bool freeze_backbone = true;
    bool augment_online = false;

    void validate() const {
        if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
        if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
        if (learning_rate < 0) throw std::invalid_argument("train: learning_rate must be >= 0");
        if (adam_beta1 < 0 || adam_beta1 >= 1 || adam_beta2 < 0 || adam_beta2 >= 1)
            throw std::invalid_argument("train: betas must lie in [0, 1)");
        if (adam_eps <= 0) throw std::invalid_argument("train: adam_eps must be > 0");
    }
};

// Bias-corrected Adam over every entry of the store. Gradients are left
// untouched; the caller zeroes them after the step.
template <class T>
void adam_step(ParamStore<T> &params, const TrainConfig &cfg, std::int64_t t) {
    if (t < 1) throw std::invalid_argument("adam_step: step index must be >= 1");
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
    for (auto &p : params) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = static_cast<double>(p.grad[i]);
            const double m = cfg.adam_beta1 * static_cast<double>(p.adam_m[i]) +
                             (1.0 - cfg.adam_beta1) * g;
            const double v = cfg.adam_beta2 * static_cast<double>(p.adam_v[i]) +
                             (1.0 - cfg.adam_beta2) * g * g;
            p.adam_m[i] = static_cast<T>(m);
            p.adam_v[i] = static_cast<T>(v);
            p.value[i] = static_cast<T>(static_cast<double>(p.value[i]) -
                                        cfg.learning_rate * (m / bc1) /
                                            (std::sqrt(v / bc2) + cfg.adam_eps));
        }
    }
}

// Per class: seeded shuffle, then floor(r0*n) train, floor(r1*n) val, rest
// test. Class proportions are preserved within one image per class.
void stratified_split(DatasetManifest &manifest, const std::array<double, 3> &ratios,
                      std::uint64_t seed);

// Images by record index; epoch keys the regeneration of augmented samples.
class SampleProvider {
public:
    virtual ~SampleProvider() = default;
    virtual std::size_t count() const = 0;
    virtual Tensor4<float> image(std::size_t record, int epoch) = 0;
    virtual bool epoch_varying(std::size_t record) const = 0;
};

struct FitData {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<int> labels; // per record

    static FitData from_manifest(const DatasetManifest &m);
};

struct TrainLog {
    struct Epoch {
        int epoch = 0;
        double train_loss = 0.0;
        double val_accuracy = 0.0;
    };
    std::vector<Epoch> epochs;
};

void save_train_log(const TrainLog &log, const std::string &path);

struct TrainState {
    std::int64_t step = 0;
    int epochs_done = 0;
};

namespace detail {

inline constexpr std::uint64_t kShuffleKey = 0x73687566ull;
inline constexpr std::uint64_t kDropoutKey = 0x64726f70ull;

// Feature cache for frozen extractors; augmented train samples regenerate per
// epoch and are never cached.
template <class T>
class FeatureSource {
public:
    FeatureSource(FeatureExtractor<T> &extractor, SampleProvider &provider, bool cache)
        : extractor_(extractor), provider_(provider), cache_(cache) {
        if (cache_) cached_.resize(provider.count());
    }

    Tensor4<T> batch(const std::vector<std::size_t> &records, int epoch) {
        Tensor4<T> out(static_cast<int>(records.size()), extractor_.output_channels(),
                       extractor_.output_h(), extractor_.output_w());
        for (std::size_t i = 0; i < records.size(); ++i) {
            const Tensor4<T> &f = features(records[i], epoch);
            std::copy(f.data.begin(), f.data.end(), out.plane(static_cast<int>(i), 0));
        }
        return out;
    }

private:
    const Tensor4<T> &features(std::size_t record, int epoch) {
        const bool varying = provider_.epoch_varying(record);
        if (cache_ && !varying && cached_[record]) return *cached_[record];
        scratch_ = extractor_.extract(provider_.image(record, varying ? epoch : 0));
        if (cache_ && !varying) {
            cached_[record] = std::move(scratch_);
            return *cached_[record];
        }
        return scratch_;
    }

    FeatureExtractor<T> &extractor_;
    SampleProvider &provider_;
    bool cache_;
    std::vector<std::optional<Tensor4<T>>> cached_;
    Tensor4<T> scratch_;
};

template <class Head>
double accuracy_over(FeatureSource<float> &source, Head &head,
                     const std::vector<std::size_t> &records, const std::vector<int> &labels,
                     int batch_size) {
    if (records.empty()) return 0.0;
    Rng unused(0);
    std::size_t correct = 0;
    for (std::size_t at = 0; at < records.size(); at += batch_size) {
        const std::size_t take = std::min<std::size_t>(batch_size, records.size() - at);
        std::vector<std::size_t> chunk(records.begin() + at, records.begin() + at + take);
        Tensor4<float> feats = source.batch(chunk, 0);
        Tensor2<float> logits = head.forward(feats, false, unused, nullptr);
        for (std::size_t i = 0; i < take; ++i) {
            int best = 0;
            for (int k = 1; k < logits.cols; ++k)
                if (logits.at(static_cast<int>(i), k) > logits.at(static_cast<int>(i), best))
                    best = k;
            if (best == labels[chunk[i]]) ++correct;
        }
    }
    return static_cast<double>(correct) / records.size();
}

} // namespace detail

// Mini-batch training loop: forward -> loss -> backward -> adam -> zero-grads,
// deterministic for a fixed config (data order, dropout masks, init). Backbone
// parameters are untouched while freeze_backbone is set. Runs epochs
// [state.epochs_done, cfg.epochs) so a loaded checkpoint resumes exactly.
template <class Head>
TrainLog fit(FeatureExtractor<float> &extractor, Head &head, SampleProvider &provider,
             const FitData &data, const TrainConfig &cfg, TrainState &state) {
    cfg.validate();
    if (data.train.empty()) throw std::invalid_argument("fit: empty train split");

    const bool train_backbone = extractor.trainable() && !cfg.freeze_backbone;
    detail::FeatureSource<float> source(extractor, provider, /*cache=*/!train_backbone);

    TrainLog log;
    for (int epoch = state.epochs_done; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order = data.train;
        Rng shuffle_rng(mix(cfg.seed, detail::kShuffleKey, static_cast<std::uint64_t>(epoch)));
        shuffle(order, shuffle_rng);

        double loss_sum = 0.0;
        int batch_index = 0;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size, ++batch_index) {
            const std::size_t take = std::min<std::size_t>(cfg.batch_size, order.size() - at);
            std::vector<std::size_t> chunk(order.begin() + at, order.begin() + at + take);
            std::vector<int> labels(take);
            for (std::size_t i = 0; i < take; ++i) labels[i] = data.labels[chunk[i]];

            Tensor4<float> feats;
            if (train_backbone) {
                // raw image batch is only assembled on the trainable path
                Tensor4<float> first =
                    provider.image(chunk[0], provider.epoch_varying(chunk[0]) ? epoch : 0);
                Tensor4<float> images(static_cast<int>(take), first.c, first.h, first.w);
                std::copy(first.data.begin(), first.data.end(), images.plane(0, 0));
                for (std::size_t i = 1; i < take; ++i) {
                    Tensor4<float> im = provider.image(
                        chunk[i], provider.epoch_varying(chunk[i]) ? epoch : 0);
                    std::copy(im.data.begin(), im.data.end(),
                              images.plane(static_cast<int>(i), 0));
                }
                feats = extractor.train_forward(images);
            } else {
                feats = source.batch(chunk, epoch);
            }

            Rng drop_rng(mix(cfg.seed, detail::kDropoutKey, static_cast<std::uint64_t>(epoch),
                             static_cast<std::uint64_t>(batch_index)));
            typename Head::Tape tape;
            Tensor2<float> logits = head.forward(feats, true, drop_rng, &tape);
            SoftmaxXentTape<float> ltape;
            auto res = softmax_xent_forward(logits, labels, &ltape);
            loss_sum += res.loss * static_cast<double>(take);

            Tensor2<float> dlogits = softmax_xent_backward(ltape);
            Tensor4<float> dfeats = head.backward(dlogits, tape);
            if (train_backbone) extractor.train_backward(dfeats);

            ++state.step;
            adam_step(head.params(), cfg, state.step);
            head.params().zero_grads();
            if (train_backbone) {
                adam_step(*extractor.trainable_params(), cfg, state.step);
                extractor.trainable_params()->zero_grads();
            }
        }

        TrainLog::Epoch entry;
        entry.epoch = epoch;
        entry.train_loss = loss_sum / static_cast<double>(order.size());
        entry.val_accuracy =
            detail::accuracy_over(source, head, data.val, data.labels, cfg.batch_size);
        log.epochs.push_back(entry);
        state.epochs_done = epoch + 1;
    }
    return log;
}

} // namespace msse
