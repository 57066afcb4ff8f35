#include "msse/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "msse/checkpoint.hpp"
#include "msse/explain.hpp"
#include "msse/metrics.hpp"
#include "msse/phash.hpp"

namespace fs = std::filesystem;

namespace msse {

Tensor4<float> image_to_tensor(const ImageU8 &img) {
    Tensor4<float> t(1, 3, img.height, img.width);
    for (int ch = 0; ch < 3; ++ch) {
        float *p = t.plane(0, ch);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                p[static_cast<std::size_t>(y) * img.width + x] =
                    static_cast<float>(img.at(x, y, ch)) / 255.0f;
    }
    return t;
}

PpmSampleProvider::PpmSampleProvider(const DatasetManifest &manifest, const AugmentSpec &augment,
                                     bool online_augment)
    : manifest_(manifest), augment_(augment), online_(online_augment),
      decoded_(manifest.records.size()) {}

const ImageU8 &PpmSampleProvider::original(std::size_t record) {
    if (!decoded_[record])
        decoded_[record] = std::make_unique<ImageU8>(load_ppm(manifest_.records[record].path));
    return *decoded_[record];
}

bool PpmSampleProvider::epoch_varying(std::size_t record) const {
    const ManifestRecord &r = manifest_.records[record];
    return online_ && r.origin == Origin::augmented && r.split == Split::train;
}

Tensor4<float> PpmSampleProvider::image(std::size_t record, int epoch) {
    const ManifestRecord &r = manifest_.records[record];
    if (r.origin == Origin::original) return image_to_tensor(original(record));
    const ImageU8 &src = original(static_cast<std::size_t>(r.source_id));
    const int key_epoch = epoch_varying(record) ? epoch : 0;
    return image_to_tensor(augment_keyed(src, augment_, key_epoch, record));
}

namespace {

int fail(const std::string &message) {
    std::cerr << "error: " << message << "\n";
    return 1;
}

// Class subdirectories (sorted), PPM files inside each (sorted) — this scan
// order is the canonical manifest order the greedy dedup depends on.
std::map<std::string, std::vector<std::string>> scan_image_tree(const std::string &root) {
    std::map<std::string, std::vector<std::string>> tree;
    for (const auto &entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        std::vector<std::string> files;
        for (const auto &file : fs::directory_iterator(entry.path()))
            if (file.is_regular_file() && file.path().extension() == ".ppm")
                files.push_back(file.path().string());
        std::sort(files.begin(), files.end());
        if (!files.empty()) tree[entry.path().filename().string()] = std::move(files);
    }
    return tree;
}

struct Models {
    std::unique_ptr<MiniDenseNet<float>> backbone;
    std::unique_ptr<MsseHead<float>> head;
};

Models build_models(const RunConfig &cfg) {
    Models m;
    m.backbone = std::make_unique<MiniDenseNet<float>>(cfg.backbone, !cfg.train.freeze_backbone);
    if (cfg.head.in_channels != m.backbone->output_channels())
        throw std::runtime_error(
            "config: head.in_channels is " + std::to_string(cfg.head.in_channels) +
            " but the backbone emits " + std::to_string(m.backbone->output_channels()) +
            " channels");
    m.head = std::make_unique<MsseHead<float>>(cfg.head);
    return m;
}

Models load_models(const RunConfig &cfg) {
    if (!fs::exists(cfg.train_paths.checkpoint))
        throw std::runtime_error("checkpoint " + cfg.train_paths.checkpoint +
                                 " not found; run 'train' first");
    Models m = build_models(cfg);
    Checkpoint ckpt = load_checkpoint(cfg.train_paths.checkpoint);
    ckpt.apply(m.backbone->params(), "backbone");
    ckpt.apply(m.head->params(), "head");
    return m;
}

DatasetManifest require_manifest(const RunConfig &cfg, bool split_needed) {
    if (!fs::exists(cfg.data.manifest))
        throw std::runtime_error("manifest " + cfg.data.manifest + " not found; run 'dedup' first");
    DatasetManifest m = load_manifest(cfg.data.manifest);
    if (m.records.empty()) throw std::runtime_error("manifest " + cfg.data.manifest + " is empty");
    if (split_needed)
        for (const auto &r : m.records)
            if (r.split == Split::unassigned)
                throw std::runtime_error("manifest has unassigned records; run 'split' first");
    return m;
}

struct TestPredictions {
    std::vector<int> truth;
    std::vector<int> preds;
    std::vector<double> scores;
    std::vector<std::string> class_names;
};

TestPredictions predict_test_split(const RunConfig &cfg, Models &models,
                                   const DatasetManifest &manifest) {
    PpmSampleProvider provider(manifest, cfg.data.augment, cfg.train.augment_online);
    const auto names = manifest.class_names();
    const int k = static_cast<int>(names.size());

    TestPredictions out;
    out.class_names = names;
    Rng unused(0);
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const auto &r = manifest.records[i];
        if (r.split != Split::test) continue;
        Tensor4<float> feats = models.backbone->extract(provider.image(i, 0));
        Tensor2<float> logits = models.head->forward(feats, false, unused, nullptr);
        double mx = logits.at(0, 0);
        for (int c = 1; c < k; ++c) mx = std::max(mx, static_cast<double>(logits.at(0, c)));
        double denom = 0.0;
        for (int c = 0; c < k; ++c) denom += std::exp(static_cast<double>(logits.at(0, c)) - mx);
        const auto it = std::lower_bound(names.begin(), names.end(), r.label);
        out.truth.push_back(static_cast<int>(it - names.begin()));
        int best = 0;
        for (int c = 1; c < k; ++c)
            if (logits.at(0, c) > logits.at(0, best)) best = c;
        out.preds.push_back(best);
        for (int c = 0; c < k; ++c)
            out.scores.push_back(std::exp(static_cast<double>(logits.at(0, c)) - mx) / denom);
    }
    if (out.truth.empty()) throw std::runtime_error("manifest has no test records");
    return out;
}

} // namespace

int cmd_dedup(const RunConfig &cfg) {
    try {
        if (cfg.data.images_root.empty())
            return fail("config: data.images_root is not set");
        if (!fs::is_directory(cfg.data.images_root))
            return fail("image root " + cfg.data.images_root + " is not a directory");
        const auto tree = scan_image_tree(cfg.data.images_root);
        if (tree.empty())
            return fail("no class subdirectories with .ppm files under " + cfg.data.images_root);

        DatasetManifest manifest;
        std::size_t unreadable = 0, seen = 0;
        for (const auto &[label, files] : tree) {
            for (const auto &path : files) {
                ++seen;
                ManifestRecord r;
                r.path = path;
                r.label = label;
                try {
                    r.phash = phash64(load_ppm(path));
                } catch (const std::exception &e) {
                    std::cerr << "warning: skipping " << path << ": " << e.what() << "\n";
                    ++unreadable;
                    continue;
                }
                manifest.records.push_back(std::move(r));
            }
        }
        if (manifest.records.empty())
            return fail("all " + std::to_string(seen) + " images failed to load");

        const DedupResult result = dedup_filter(manifest.records, cfg.data.tau);
        save_rejection_log(manifest.records, result, cfg.data.rejection_log);

        DatasetManifest kept;
        std::map<std::string, std::pair<std::size_t, std::size_t>> per_class; // kept, rejected
        for (std::size_t idx : result.retained) {
            per_class[manifest.records[idx].label].first++;
            kept.records.push_back(manifest.records[idx]);
        }
        for (const auto &rej : result.rejections)
            per_class[manifest.records[rej.record].label].second++;
        save_manifest(kept, cfg.data.manifest);

        std::cout << "dedup: tau=" << cfg.data.tau << "\n";
        for (const auto &[label, counts] : per_class)
            std::cout << "  " << label << ": retained " << counts.first << ", rejected "
                      << counts.second << "\n";
        std::cout << "manifest: " << cfg.data.manifest << " (" << kept.records.size()
                  << " records), rejection log: " << cfg.data.rejection_log;
        if (unreadable) std::cout << ", unreadable: " << unreadable;
        std::cout << "\n";
        return 0;
    } catch (const std::exception &e) {
        return fail(e.what());
    }
}

int cmd_split(const RunConfig &cfg) {
    try {
        DatasetManifest manifest = require_manifest(cfg, false);
        if (cfg.data.target_per_class > 0) {
            const auto plan = balance_plan(manifest, cfg.data.target_per_class);
            apply_balance_plan(manifest, plan);
            std::cout << "balance: target " << cfg.data.target_per_class << " per class\n";
            for (const auto &[label, count] : plan)
                std::cout << "  " << label << ": +" << count << " augmented\n";
        }
        stratified_split(manifest, {0.8, 0.1, 0.1}, cfg.train.seed);
        save_manifest(manifest, cfg.data.manifest);

        std::map<std::string, std::array<std::size_t, 3>> table;
        for (const auto &r : manifest.records) {
            auto &row = table[r.label];
            if (r.split == Split::train) ++row[0];
            else if (r.split == Split::val) ++row[1];
            else ++row[2];
        }
        std::cout << "split (train/val/test):\n";
        for (const auto &[label, row] : table)
            std::cout << "  " << label << ": " << row[0] << "/" << row[1] << "/" << row[2] << "\n";
        return 0;
    } catch (const std::exception &e) {
        return fail(e.what());
    }
}

int cmd_train(const RunConfig &cfg) {
    try {
        DatasetManifest manifest = require_manifest(cfg, true);
        Models models = build_models(cfg);
        models.backbone->init(cfg.train.seed);
        models.head->init(cfg.train.seed);

        PpmSampleProvider provider(manifest, cfg.data.augment, cfg.train.augment_online);
        FitData data = FitData::from_manifest(manifest);
        TrainState state;
        TrainLog log = fit(*models.backbone, *models.head, provider, data, cfg.train, state);

        save_train_log(log, cfg.train_paths.log_csv);
        Checkpoint ckpt;
        checkpoint_add_store(ckpt, models.backbone->params(), "backbone");
        checkpoint_add_store(ckpt, models.head->params(), "head");
        checkpoint_set_config(ckpt, run_config_to_json(cfg));
        ckpt.step = static_cast<std::uint64_t>(state.step);
        save_checkpoint(ckpt, cfg.train_paths.checkpoint);

        if (!log.epochs.empty()) {
            const auto &last = log.epochs.back();
            std::printf("train: %d epochs, final loss %.6f, val accuracy %.4f\n",
                        static_cast<int>(log.epochs.size()), last.train_loss, last.val_accuracy);
        }
        std::cout << "checkpoint: " << cfg.train_paths.checkpoint
                  << ", log: " << cfg.train_paths.log_csv << "\n";
        return 0;
    } catch (const std::exception &e) {
        return fail(e.what());
    }
}

int cmd_eval(const RunConfig &cfg) {
    try {
        DatasetManifest manifest = require_manifest(cfg, true);
        Models models = load_models(cfg);
        TestPredictions p = predict_test_split(cfg, models, manifest);
        EvalReport report =
            evaluate(p.truth, p.preds, p.scores, static_cast<int>(p.class_names.size()),
                     p.class_names, cfg.eval.averaging);
        save_report_json(report, cfg.eval.report_json);
        save_roc_csv(report.roc, cfg.eval.roc_csv);
        save_pr_csv(report.pr, cfg.eval.pr_csv);
        std::printf("eval: %zu test images, accuracy %.4f, kappa %.4f, auc %.6f, ap %.6f\n",
                    p.truth.size(), report.metrics.accuracy, report.kappa.kappa, report.roc.auc,
                    report.pr.average_precision);
        std::cout << "report: " << cfg.eval.report_json << ", curves: " << cfg.eval.roc_csv
                  << " " << cfg.eval.pr_csv << "\n";
        return 0;
    } catch (const std::exception &e) {
        return fail(e.what());
    }
}

int cmd_gradcam(const RunConfig &cfg, const std::string &image_path, int target_class,
                const std::string &out_override) {
    try {
        if (!fs::exists(image_path)) return fail("image " + image_path + " not found");
        Models models = load_models(cfg);
        if (target_class < 0 || target_class >= cfg.head.num_classes)
            return fail("class " + std::to_string(target_class) + " outside [0," +
                        std::to_string(cfg.head.num_classes) + ")");
        const ImageU8 img = load_ppm(image_path);
        Tensor4<float> feats = models.backbone->extract(image_to_tensor(img));
        const int out_size = cfg.explain.out_size > 0 ? cfg.explain.out_size : feats.h;
        Heatmap map = msse_grad_cam(*models.head, feats, target_class, out_size, out_size);
        const std::string out_path =
            out_override.empty() ? cfg.explain.overlay_out : out_override;
        save_ppm(render_heatmap_overlay(img, map, cfg.explain.alpha), out_path);
        save_heatmap_csv(map, cfg.explain.values_csv);
        std::cout << "gradcam: class " << target_class << (map.all_zero ? " (all-zero map)" : "")
                  << ", overlay: " << out_path << ", values: " << cfg.explain.values_csv << "\n";
        return 0;
    } catch (const std::exception &e) {
        return fail(e.what());
    }
}

int cmd_report(const RunConfig &cfg) {
    try {
        if (!fs::exists(cfg.eval.report_json))
            return fail("report " + cfg.eval.report_json + " not found; run 'eval' first");
        const EvalReport report = load_report_json(cfg.eval.report_json);
        const std::string table = render_report_table(report);
        std::cout << table;
        std::ofstream out(cfg.eval.report_txt);
        if (!out) return fail("cannot open " + cfg.eval.report_txt + " for writing");
        out << table;
        return 0;
    } catch (const std::exception &e) {
        return fail(e.what());
    }
}

} // namespace msse
