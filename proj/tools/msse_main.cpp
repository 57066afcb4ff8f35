#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "msse/commands.hpp"

int main(int argc, char **argv) {
    CLI::App app{"msse: structural-damage classifier pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string image_path;
    std::string out_path;
    int target_class = 0;

    auto add_config = [&](CLI::App *cmd) {
        cmd->add_option("--config", config_path, "run configuration JSON")->required();
    };

    CLI::App *dedup = app.add_subcommand("dedup", "hash an image tree and drop near-duplicates");
    CLI::App *split = app.add_subcommand("split", "balance and stratify the manifest 80:10:10");
    CLI::App *train = app.add_subcommand("train", "train the model and write a checkpoint");
    CLI::App *eval = app.add_subcommand("eval", "score the test split and write the report");
    CLI::App *gradcam = app.add_subcommand("gradcam", "render a class-activation overlay");
    CLI::App *report = app.add_subcommand("report", "print the per-class metrics table");
    for (CLI::App *cmd : {dedup, split, train, eval, gradcam, report}) add_config(cmd);

    gradcam->add_option("--image", image_path, "input PPM image")->required();
    gradcam->add_option("--class", target_class, "target class index")->required();
    gradcam->add_option("--out", out_path, "overlay output path (overrides config)");

    CLI11_PARSE(app, argc, argv);

    msse::RunConfig cfg;
    try {
        cfg = msse::load_run_config(config_path);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    if (dedup->parsed()) return msse::cmd_dedup(cfg);
    if (split->parsed()) return msse::cmd_split(cfg);
    if (train->parsed()) return msse::cmd_train(cfg);
    if (eval->parsed()) return msse::cmd_eval(cfg);
    if (gradcam->parsed()) return msse::cmd_gradcam(cfg, image_path, target_class, out_path);
    if (report->parsed()) return msse::cmd_report(cfg);
    return 1;
}
