#include "msse/run_config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace msse {

namespace {

using nlohmann::json;

// Fails on keys the schema does not know about.
class StrictObject {
public:
    StrictObject(const json &j, std::string section) : j_(j), section_(std::move(section)) {
        if (!j.is_object())
            throw std::runtime_error("config: section '" + section_ + "' must be an object");
    }

    ~StrictObject() = default;

    template <class T>
    void get(const char *key, T &target) {
        seen_.insert(key);
        if (j_.contains(key)) {
            try {
                target = j_.at(key).get<T>();
            } catch (const json::exception &) {
                throw std::runtime_error("config: bad value for " + section_ + "." + key);
            }
        }
    }

    const json *sub(const char *key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw std::runtime_error("config: unknown key '" + section_ + "." + it.key() +
                                         "'");
    }

private:
    const json &j_;
    std::string section_;
    std::set<std::string> seen_;
};

void parse_backbone(const json &j, MiniDenseNetConfig &cfg) {
    StrictObject o(j, "backbone");
    o.get("input_size", cfg.input_size);
    o.get("stem_channels", cfg.stem_channels);
    o.get("compression", cfg.compression);
    if (const json *blocks = o.sub("blocks")) {
        if (!blocks->is_array())
            throw std::runtime_error("config: backbone.blocks must be an array of [layers, growth]");
        cfg.blocks.clear();
        for (const auto &b : *blocks) {
            if (!b.is_array() || b.size() != 2)
                throw std::runtime_error("config: each backbone block must be [layers, growth]");
            cfg.blocks.push_back({b[0].get<int>(), b[1].get<int>()});
        }
    }
    o.finish();
}

void parse_head(const json &j, MsseHeadConfig &cfg) {
    StrictObject o(j, "head");
    o.get("in_channels", cfg.in_channels);
    o.get("proj_channels", cfg.proj_channels);
    o.get("se_ratio", cfg.se_ratio);
    o.get("spatial_kernel", cfg.spatial_kernel);
    o.get("dropout_rate", cfg.dropout_rate);
    o.get("num_classes", cfg.num_classes);
    if (const json *kernels = o.sub("branch_kernels")) {
        if (!kernels->is_array() || kernels->size() != 2)
            throw std::runtime_error("config: head.branch_kernels must be [small, large]");
        cfg.branch_kernel_small = (*kernels)[0].get<int>();
        cfg.branch_kernel_large = (*kernels)[1].get<int>();
    }
    cfg.fused_channels = 2 * cfg.proj_channels;
    o.finish();
}

void parse_train(const json &j, TrainConfig &cfg, TrainPaths &paths) {
    StrictObject o(j, "train");
    o.get("batch_size", cfg.batch_size);
    o.get("epochs", cfg.epochs);
    o.get("learning_rate", cfg.learning_rate);
    o.get("adam_beta1", cfg.adam_beta1);
    o.get("adam_beta2", cfg.adam_beta2);
    o.get("adam_eps", cfg.adam_eps);
    o.get("seed", cfg.seed);
    o.get("freeze_backbone", cfg.freeze_backbone);
    o.get("augment_online", cfg.augment_online);
    o.get("checkpoint", paths.checkpoint);
    o.get("log_csv", paths.log_csv);
    o.finish();
}

void parse_augment(const json &j, AugmentSpec &spec) {
    StrictObject o(j, "data.augment");
    o.get("hflip_prob", spec.hflip_prob);
    o.get("vflip_prob", spec.vflip_prob);
    o.get("rotation_deg", spec.rotation_deg);
    o.get("crop_min_frac", spec.crop_min_frac);
    o.get("brightness_delta", spec.brightness_delta);
    o.get("contrast_lo", spec.contrast_lo);
    o.get("contrast_hi", spec.contrast_hi);
    o.get("seed", spec.seed);
    o.finish();
}

void parse_data(const json &j, DataConfig &cfg) {
    StrictObject o(j, "data");
    o.get("images_root", cfg.images_root);
    o.get("manifest", cfg.manifest);
    o.get("rejection_log", cfg.rejection_log);
    o.get("tau", cfg.tau);
    o.get("target_per_class", cfg.target_per_class);
    if (const json *aug = o.sub("augment")) parse_augment(*aug, cfg.augment);
    o.finish();
}

void parse_eval(const json &j, EvalConfig &cfg) {
    StrictObject o(j, "eval");
    std::string averaging = to_string(cfg.averaging);
    o.get("averaging", averaging);
    cfg.averaging = averaging_from_string(averaging);
    o.get("report_json", cfg.report_json);
    o.get("report_txt", cfg.report_txt);
    o.get("roc_csv", cfg.roc_csv);
    o.get("pr_csv", cfg.pr_csv);
    o.finish();
}

void parse_explain(const json &j, ExplainConfig &cfg) {
    StrictObject o(j, "explain");
    o.get("alpha", cfg.alpha);
    o.get("out_size", cfg.out_size);
    o.get("overlay_out", cfg.overlay_out);
    o.get("values_csv", cfg.values_csv);
    o.finish();
}

} // namespace

void RunConfig::validate() const {
    backbone.validate();
    head.validate();
    train.validate();
    data.augment.validate();
    if (data.tau < 0.0 || data.tau > 1.0)
        throw std::runtime_error("config: data.tau must be in [0, 1]");
    if (explain.alpha < 0.0 || explain.alpha > 1.0)
        throw std::runtime_error("config: explain.alpha must be in [0, 1]");
}

RunConfig parse_run_config(const std::string &json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception &e) {
        throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
    }
    RunConfig cfg;
    StrictObject root(j, "<root>");
    if (const json *s = root.sub("backbone")) parse_backbone(*s, cfg.backbone);
    if (const json *s = root.sub("head")) parse_head(*s, cfg.head);
    if (const json *s = root.sub("train")) parse_train(*s, cfg.train, cfg.train_paths);
    if (const json *s = root.sub("data")) parse_data(*s, cfg.data);
    if (const json *s = root.sub("eval")) parse_eval(*s, cfg.eval);
    if (const json *s = root.sub("explain")) parse_explain(*s, cfg.explain);
    root.finish();
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

std::string run_config_to_json(const RunConfig &cfg) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
    for (const auto &b : cfg.backbone.blocks) blocks.push_back({b.layers, b.growth});
    j["backbone"] = {{"input_size", cfg.backbone.input_size},
                     {"stem_channels", cfg.backbone.stem_channels},
                     {"blocks", blocks},
                     {"compression", cfg.backbone.compression}};
    j["head"] = {{"in_channels", cfg.head.in_channels},
                 {"branch_kernels",
                  nlohmann::ordered_json::array(
                      {cfg.head.branch_kernel_small, cfg.head.branch_kernel_large})},
                 {"proj_channels", cfg.head.proj_channels},
                 {"se_ratio", cfg.head.se_ratio},
                 {"spatial_kernel", cfg.head.spatial_kernel},
                 {"dropout_rate", cfg.head.dropout_rate},
                 {"num_classes", cfg.head.num_classes}};
    j["train"] = {{"batch_size", cfg.train.batch_size},
                  {"epochs", cfg.train.epochs},
                  {"learning_rate", cfg.train.learning_rate},
                  {"adam_beta1", cfg.train.adam_beta1},
                  {"adam_beta2", cfg.train.adam_beta2},
                  {"adam_eps", cfg.train.adam_eps},
                  {"seed", cfg.train.seed},
                  {"freeze_backbone", cfg.train.freeze_backbone},
                  {"augment_online", cfg.train.augment_online},
                  {"checkpoint", cfg.train_paths.checkpoint},
                  {"log_csv", cfg.train_paths.log_csv}};
    j["data"] = {{"images_root", cfg.data.images_root},
                 {"manifest", cfg.data.manifest},
                 {"rejection_log", cfg.data.rejection_log},
                 {"tau", cfg.data.tau},
                 {"target_per_class", cfg.data.target_per_class},
                 {"augment",
                  {{"hflip_prob", cfg.data.augment.hflip_prob},
                   {"vflip_prob", cfg.data.augment.vflip_prob},
                   {"rotation_deg", cfg.data.augment.rotation_deg},
                   {"crop_min_frac", cfg.data.augment.crop_min_frac},
                   {"brightness_delta", cfg.data.augment.brightness_delta},
                   {"contrast_lo", cfg.data.augment.contrast_lo},
                   {"contrast_hi", cfg.data.augment.contrast_hi},
                   {"seed", cfg.data.augment.seed}}}};
    j["eval"] = {{"averaging", to_string(cfg.eval.averaging)},
                 {"report_json", cfg.eval.report_json},
                 {"report_txt", cfg.eval.report_txt},
                 {"roc_csv", cfg.eval.roc_csv},
                 {"pr_csv", cfg.eval.pr_csv}};
    j["explain"] = {{"alpha", cfg.explain.alpha},
                    {"out_size", cfg.explain.out_size},
                    {"overlay_out", cfg.explain.overlay_out},
                    {"values_csv", cfg.explain.values_csv}};
    return j.dump(2);
}

} // namespace msse
