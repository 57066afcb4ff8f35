#pragma once

#include <string>

#include "msse/augment.hpp"
#include "msse/backbone.hpp"
#include "msse/head.hpp"
#include "msse/metrics.hpp"
#include "msse/trainer.hpp"

namespace msse {

// Whole-run configuration, one JSON document. Parsing is strict: any unknown
// key at any level is an error, so typos cannot silently fall back to
// defaults. Every default matches the published training recipe.
struct DataConfig {
    std::string images_root;
    std::string manifest = "manifest.jsonl";
    std::string rejection_log = "rejections.csv";
    double tau = 0.30;                // dedup similarity threshold
    std::size_t target_per_class = 0; // 0 disables balancing
    AugmentSpec augment;
};

struct TrainPaths {
    std::string checkpoint = "model.ckpt";
    std::string log_csv = "training_log.csv";
};

struct EvalConfig {
    Averaging averaging = Averaging::micro;
    std::string report_json = "report.json";
    std::string report_txt = "report.txt";
    std::string roc_csv = "roc.csv";
    std::string pr_csv = "pr.csv";
};

struct ExplainConfig {
    double alpha = 0.5;
    int out_size = 0; // 0 = keep the feature-map resolution
    std::string overlay_out = "gradcam.ppm";
    std::string values_csv = "gradcam.csv";
};

struct RunConfig {
    MiniDenseNetConfig backbone;
    MsseHeadConfig head;
    TrainConfig train;
    TrainPaths train_paths;
    DataConfig data;
    EvalConfig eval;
    ExplainConfig explain;

    void validate() const;
};

RunConfig parse_run_config(const std::string &json_text);
RunConfig load_run_config(const std::string &path);
std::string run_config_to_json(const RunConfig &cfg);

} // namespace msse
