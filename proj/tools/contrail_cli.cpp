// contrail: command-line front end for the contrail segmentation toolkit.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "contrail/annotations.hpp"
#include "contrail/composite.hpp"
#include "contrail/gradcheck.hpp"
#include "contrail/harness.hpp"
#include "contrail/raster.hpp"

namespace fs = std::filesystem;
using namespace contrail;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
}

int run_prepare(const std::string& annotations, const std::string& bandstacks, int size, const std::string& out_dir) {
    const auto records = load_scene_records(annotations);
    const auto samples = prepare_scenes(records, bandstacks, size);
    write_dataset(out_dir, samples);
    std::size_t positive = 0;
    for (const auto& s : samples) {
        positive += has_contrail(s) ? 1 : 0;
    }
    fmt::print("prepared {} scenes ({} with contrails) into {}\n", samples.size(), positive, out_dir);
    return 0;
}

int run_synth(const std::string& config_path, std::size_t count, std::uint64_t seed, int size, bool seed_set,
              bool count_set, bool size_set, const std::string& out_dir) {
    SynthParams params;
    std::size_t n = 25;
    if (!config_path.empty()) {
        const RunConfig cfg = load_run_config(config_path);
        params = cfg.synth;
        n = cfg.synth_count;
    }
    if (seed_set) params.seed = seed;
    if (count_set) n = count;
    if (size_set) params.height = params.width = size;
    write_dataset(out_dir, generate_dataset(params, n));
    fmt::print("wrote {} synthetic scenes ({}x{}, seed {}) into {}\n", n, params.height, params.width, params.seed,
               out_dir);
    return 0;
}

int run_train(const std::string& config_path, const std::string& out_dir) {
    const RunConfig cfg = load_run_config(config_path);
    const PreparedData data = prepare_data(cfg);
    fmt::print("train scenes: {}, test scenes: {}\n", data.train.size(), data.test.size());
    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult result = train(cfg, data.train);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::create_directories(out_dir);
    nn::save_checkpoint((fs::path(out_dir) / "checkpoint.cnet").string(), result.net, &result.optimizer);
    write_text(fs::path(out_dir) / "train_log.csv", result.log_csv);
    fmt::print("steps: {}, time: {:.1f}s, final train mean IoU: {:.4f}\n", cfg.steps, seconds, result.final_train_iou);
    if (!data.test.empty()) {
        const EvalReport report = evaluate(result.net, data.test, cfg.eval_threshold);
        write_text(fs::path(out_dir) / "test_eval.csv", report.to_csv());
        fmt::print("test mean IoU: {:.4f}, global IoU: {:.4f}\n", report.mean_iou, report.global_iou);
    }
    return 0;
}

int run_eval(const std::string& checkpoint, const std::string& dataset, const std::string& split, double threshold,
             const std::string& csv_path) {
    const nn::Checkpoint ck = nn::load_checkpoint(checkpoint);
    std::vector<Sample> samples;
    if (fs::is_directory(dataset)) {
        samples = read_dataset(dataset);
    } else {
        const PreparedData data = prepare_data(load_run_config(dataset));
        if (split == "train" || split == "all") samples = data.train;
        if (split == "test" || split == "all") samples.insert(samples.end(), data.test.begin(), data.test.end());
    }
    const EvalReport report = evaluate(ck.net, samples, threshold);
    const std::string csv = report.to_csv();
    if (csv_path.empty()) {
        std::cout << csv;
    } else {
        write_text(csv_path, csv);
    }
    fmt::print(stderr, "scenes: {}, mean IoU: {:.4f}, global IoU: {:.4f}\n", samples.size(), report.mean_iou,
               report.global_iou);
    return 0;
}

int run_gradcheck(int trials) {
    bool ok = true;
    LossGradCheckOptions loss_opts;
    loss_opts.trials = trials;
    for (const auto& r : check_loss_gradients(loss_opts)) {
        fmt::print("[{}] loss {:<26} cases={:<3} max_rel_err={:.3e} (tol {:.0e})\n", r.passed() ? "PASS" : "FAIL",
                   r.name, r.cases, r.max_rel_error, r.tolerance);
        ok = ok && r.passed();
    }
    const GradCheckResult net = check_network_gradients();
    fmt::print("[{}] {:<31} params={:<5} skipped={:<3} max_rel_err={:.3e} (tol {:.0e})\n",
               net.passed() ? "PASS" : "FAIL", net.name, net.cases, net.skipped, net.max_rel_error, net.tolerance);
    if (!net.passed()) {
        fmt::print("       {} entries over tolerance; worst {}\n", net.over_tolerance, net.worst);
    }
    ok = ok && net.passed();
    return ok ? 0 : 1;
}

int run_overlay(const std::string& checkpoint, const std::string& image_path, const std::string& mask_path,
                double threshold, const std::string& out_path) {
    const nn::Checkpoint ck = nn::load_checkpoint(checkpoint);
    const ImagePlane image = read_rgb_png(image_path);
    const Mask truth = mask_path.empty() ? Mask(image.height, image.width) : read_mask_png(mask_path);
    const nn::Tensor probs = ck.net.predict(to_tensor(std::span<const ImagePlane>(&image, 1)));
    const Mask pred = binarize(to_prob_map(probs, 0), threshold);
    write_rgb_png(out_path, render_overlay(image, truth, pred));
    fmt::print("IoU {:.4f}; overlay written to {}\n", iou(pred, truth), out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Contrail segmentation toolkit"};
    app.require_subcommand(1);

    std::string annotations;
    std::string bandstacks;
    std::string out_dir;
    int size = 512;
    auto* prepare = app.add_subcommand("prepare", "Annotations + band stacks -> resized image/mask pairs");
    prepare->add_option("--annotations", annotations, "Annotation JSON file")->required();
    prepare->add_option("--bandstacks", bandstacks, "Directory of <scene_id>.bstk files")->required();
    prepare->add_option("--size", size, "Output height and width")->capture_default_str();
    prepare->add_option("-o,--out", out_dir, "Output dataset directory")->required();

    std::string synth_config;
    std::size_t synth_count = 25;
    std::uint64_t synth_seed = 7;
    int synth_size = 64;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "Emit a synthetic contrail dataset");
    synth->add_option("--config", synth_config, "Run config to take synthetic settings from");
    auto* count_opt = synth->add_option("--count", synth_count, "Number of scenes");
    auto* seed_opt = synth->add_option("--seed", synth_seed, "Generator seed");
    auto* size_opt = synth->add_option("--size", synth_size, "Scene height and width");
    synth->add_option("-o,--out", synth_out, "Output dataset directory")->required();

    std::string train_config;
    std::string train_out = "run";
    auto* train_cmd = app.add_subcommand("train", "Train a network from a run config");
    train_cmd->add_option("config", train_config, "Run config (JSON with comments)")->required();
    train_cmd->add_option("-o,--out", train_out, "Output directory")->capture_default_str();

    std::string eval_ckpt;
    std::string eval_data;
    std::string eval_split = "test";
    double eval_threshold = 0.5;
    std::string eval_csv;
    auto* eval = app.add_subcommand("eval", "IoU report for a checkpoint on a dataset");
    eval->add_option("checkpoint", eval_ckpt, "Checkpoint file")->required();
    eval->add_option("dataset", eval_data, "Dataset directory or run config")->required();
    eval->add_option("--split", eval_split, "Split when the dataset is a run config")
        ->check(CLI::IsMember({"train", "test", "all"}))
        ->capture_default_str();
    eval->add_option("--threshold", eval_threshold, "Binarization threshold")->capture_default_str();
    eval->add_option("--csv", eval_csv, "Write the CSV report here instead of stdout");

    int gc_trials = 20;
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference checks of losses and network");
    gradcheck->add_option("--trials", gc_trials, "Random inputs per loss")->capture_default_str();

    std::string ov_ckpt;
    std::string ov_image;
    std::string ov_mask;
    double ov_threshold = 0.5;
    std::string ov_out = "overlay.png";
    auto* overlay = app.add_subcommand("overlay", "Render input | truth | prediction | disagreement");
    overlay->add_option("checkpoint", ov_ckpt, "Checkpoint file")->required();
    overlay->add_option("scene", ov_image, "Scene image (RGB PNG)")->required();
    overlay->add_option("--mask", ov_mask, "Ground-truth mask PNG");
    overlay->add_option("--threshold", ov_threshold, "Binarization threshold")->capture_default_str();
    overlay->add_option("-o,--out", ov_out, "Output PNG")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*prepare) return run_prepare(annotations, bandstacks, size, out_dir);
        if (*synth) {
            return run_synth(synth_config, synth_count, synth_seed, synth_size, seed_opt->count() > 0,
                             count_opt->count() > 0, size_opt->count() > 0, synth_out);
        }
        if (*train_cmd) return run_train(train_config, train_out);
        if (*eval) return run_eval(eval_ckpt, eval_data, eval_split, eval_threshold, eval_csv);
        if (*gradcheck) return run_gradcheck(gc_trials);
        if (*overlay) return run_overlay(ov_ckpt, ov_image, ov_mask, ov_threshold, ov_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
