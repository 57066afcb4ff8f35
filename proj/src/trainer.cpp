#include "msse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace msse {

void stratified_split(DatasetManifest &manifest, const std::array<double, 3> &ratios,
                      std::uint64_t seed) {
    const double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("split: ratios must sum to 1");
    auto classes = manifest.by_class();
    if (classes.empty()) throw std::invalid_argument("split: empty manifest");
    std::size_t class_idx = 0;
    for (auto &[label, indices] : classes) {
        if (indices.size() < 3)
            throw std::invalid_argument("split: class " + label + " has fewer than 3 images");
        Rng rng(mix(seed, 0x73706c74ull, class_idx++));
        shuffle(indices, rng);
        const std::size_t n = indices.size();
        const auto n_train = static_cast<std::size_t>(ratios[0] * static_cast<double>(n));
        const auto n_val = static_cast<std::size_t>(ratios[1] * static_cast<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            Split s = i < n_train            ? Split::train
                      : i < n_train + n_val ? Split::val
                                            : Split::test;
            manifest.records[indices[i]].split = s;
        }
    }
}

FitData FitData::from_manifest(const DatasetManifest &m) {
    FitData data;
    const auto names = m.class_names();
    data.labels.resize(m.records.size());
    for (std::size_t i = 0; i < m.records.size(); ++i) {
        const auto &r = m.records[i];
        const auto it = std::lower_bound(names.begin(), names.end(), r.label);
        data.labels[i] = static_cast<int>(it - names.begin());
        if (r.split == Split::train) data.train.push_back(i);
        else if (r.split == Split::val) data.val.push_back(i);
    }
    return data;
}

void save_train_log(const TrainLog &log, const std::string &path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("train log: cannot open " + path + " for writing");
    out << "epoch,train_loss,val_accuracy\n";
    char buf[80];
    for (const auto &e : log.epochs) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g\n", e.epoch, e.train_loss, e.val_accuracy);
        out << buf;
    }
    if (!out) throw std::runtime_error("train log: short write to " + path);
}

} // namespace msse
