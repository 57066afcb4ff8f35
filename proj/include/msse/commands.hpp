#pragma once

#include <string>

#include "msse/run_config.hpp"
#include "msse/trainer.hpp"

namespace msse {

// Batch entry points behind the CLI subcommands. Each writes its artifact(s)
// and returns 0 on success; failures print an actionable message to stderr
// and return nonzero. All randomness flows from the config seeds.
int cmd_dedup(const RunConfig &cfg);
int cmd_split(const RunConfig &cfg);
int cmd_train(const RunConfig &cfg);
int cmd_eval(const RunConfig &cfg);
int cmd_gradcam(const RunConfig &cfg, const std::string &image_path, int target_class,
                const std::string &out_override);
int cmd_report(const RunConfig &cfg);

// Decodes PPM records on demand and regenerates augmented samples from their
// source original, keyed by (augment seed, epoch, record). Train-split
// augmented records vary per epoch only when online augmentation is on;
// everything else is epoch-invariant.
class PpmSampleProvider : public SampleProvider {
public:
    PpmSampleProvider(const DatasetManifest &manifest, const AugmentSpec &augment,
                      bool online_augment);

    std::size_t count() const override { return manifest_.records.size(); }
    Tensor4<float> image(std::size_t record, int epoch) override;
    bool epoch_varying(std::size_t record) const override;

private:
    const ImageU8 &original(std::size_t record);

    const DatasetManifest &manifest_;
    AugmentSpec augment_;
    bool online_;
    std::vector<std::unique_ptr<ImageU8>> decoded_; // lazy per-record cache
};

Tensor4<float> image_to_tensor(const ImageU8 &img);

} // namespace msse
