#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "contrail/harness.hpp"

namespace contrail {
namespace {

using nlohmann::json;

template <class T>
void read(const json& obj, const char* key, T& out) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        return;
    }
    try {
        out = it->get<T>();
    } catch (const json::exception& e) {
        throw Error(std::string("config key '") + key + "': " + e.what());
    }
}

template <class Range, class V>
void read_range(const json& obj, const char* key, Range& out) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        return;
    }
    if (!it->is_array() || it->size() != 2) {
        throw Error(std::string("config key '") + key + "': expected [lo, hi]");
    }
    out.lo = (*it)[0].get<V>();
    out.hi = (*it)[1].get<V>();
}

const json& section(const json& root, const char* key) {
    static const json empty = json::object();
    auto it = root.find(key);
    if (it == root.end()) {
        return empty;
    }
    if (!it->is_object()) {
        throw Error(std::string("config section '") + key + "' must be an object");
    }
    return *it;
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            ok = ok || key == a;
        }
        if (!ok) {
            throw Error("config: unknown key '" + key + "' in " + where);
        }
    }
}

std::string resolve(const std::string& base, const std::string& path) {
    if (path.empty()) {
        return path;
    }
    const std::filesystem::path p(path);
    return p.is_absolute() ? path : (std::filesystem::path(base) / p).lexically_normal().string();
}

}  // namespace

AugmentMode parse_augment_mode(std::string_view name) {
    if (name == "none") return AugmentMode::none;
    if (name == "rot90_flip") return AugmentMode::rot90_flip;
    throw Error("unknown augment mode '" + std::string(name) + "'");
}

std::string_view to_string(AugmentMode mode) noexcept { return mode == AugmentMode::none ? "none" : "rot90_flip"; }

void RunConfig::validate() const {
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw Error("config: split_ratio must lie in (0, 1)");
    if (steps < 0) throw Error("config: steps must be >= 0");
    if (batch_size < 1) throw Error("config: batch_size must be >= 1");
    if (eval_every < 1) throw Error("config: eval_every must be >= 1");
    if (!(eval_threshold > 0.0 && eval_threshold < 1.0)) throw Error("config: eval_threshold must lie in (0, 1)");
    if (!(lr > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps_opt > 0.0)) {
        throw Error("config: optimizer settings out of range");
    }
    net.validate();
    loss_params.validate();
    if (target_size <= 0 || target_size % (1 << net.depth) != 0) {
        throw Error("config: target_size " + std::to_string(target_size) + " must be positive and divisible by 2^depth = " +
                    std::to_string(1 << net.depth));
    }
    switch (source) {
        case SourceKind::synthetic:
            synth.validate();
            if (net.in_channels != 3) throw Error("config: synthetic scenes have 3 channels");
            break;
        case SourceKind::real:
            if (annotations_path.empty() || bandstack_dir.empty()) {
                throw Error("config: real source needs 'annotations' and 'bandstacks'");
            }
            if (net.in_channels != 3) throw Error("config: false-color scenes have 3 channels");
            break;
        case SourceKind::directory:
            if (dataset_dir.empty()) throw Error("config: directory source needs 'path'");
            break;
    }
}

RunConfig parse_run_config(std::string_view text, const std::string& base_dir) {
    json root;
    try {
        root = json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("run config: ") + e.what(), e.byte);
    }
    if (!root.is_object()) {
        throw ParseError("run config: top level must be an object", 0);
    }
    reject_unknown(root,
                   {"source", "synthetic", "real", "directory", "target_size", "split_ratio", "split_seed",
                    "filter_empty", "eval_include_empty", "loss", "net", "optimizer", "steps", "batch_size",
                    "shuffle_seed", "augment", "augment_seed", "eval_threshold", "eval_every"},
                   "top level");

    RunConfig c;
    try {
        const std::string source = root.value("source", std::string("synthetic"));
        if (source == "synthetic") {
            c.source = SourceKind::synthetic;
        } else if (source == "real") {
            c.source = SourceKind::real;
        } else if (source == "directory") {
            c.source = SourceKind::directory;
        } else {
            throw Error("config: unknown source '" + source + "'");
        }

        const json& syn = section(root, "synthetic");
        reject_unknown(syn,
                       {"height", "width", "n_contrails", "line_width", "blur_sigma", "n_clutter_blobs", "noise_std",
                        "seed", "count"},
                       "synthetic");
        read(syn, "height", c.synth.height);
        read(syn, "width", c.synth.width);
        read_range<IntRange, int>(syn, "n_contrails", c.synth.n_contrails);
        read_range<RealRange, double>(syn, "line_width", c.synth.line_width);
        read(syn, "blur_sigma", c.synth.blur_sigma);
        read_range<IntRange, int>(syn, "n_clutter_blobs", c.synth.n_clutter_blobs);
        read(syn, "noise_std", c.synth.noise_std);
        read(syn, "seed", c.synth.seed);
        read(syn, "count", c.synth_count);

        const json& real = section(root, "real");
        reject_unknown(real, {"annotations", "bandstacks", "ranges"}, "real");
        read(real, "annotations", c.annotations_path);
        read(real, "bandstacks", c.bandstack_dir);
        c.annotations_path = resolve(base_dir, c.annotations_path);
        c.bandstack_dir = resolve(base_dir, c.bandstack_dir);
        const json& ranges = section(real, "ranges");
        reject_unknown(ranges, {"red", "green", "blue"}, "real.ranges");
        RealRange red{c.ranges.red_lo, c.ranges.red_hi};
        RealRange green{c.ranges.green_lo, c.ranges.green_hi};
        RealRange blue{c.ranges.blue_lo, c.ranges.blue_hi};
        read_range<RealRange, double>(ranges, "red", red);
        read_range<RealRange, double>(ranges, "green", green);
        read_range<RealRange, double>(ranges, "blue", blue);
        c.ranges = {red.lo, red.hi, green.lo, green.hi, blue.lo, blue.hi};

        const json& dir = section(root, "directory");
        reject_unknown(dir, {"path"}, "directory");
        read(dir, "path", c.dataset_dir);
        c.dataset_dir = resolve(base_dir, c.dataset_dir);

        read(root, "target_size", c.target_size);
        read(root, "split_ratio", c.split_ratio);
        read(root, "split_seed", c.split_seed);
        read(root, "filter_empty", c.filter_empty);
        read(root, "eval_include_empty", c.eval_include_empty);

        const json& loss = section(root, "loss");
        reject_unknown(loss,
                       {"name", "alpha", "beta", "gamma", "delta", "epsilon", "dice_variant", "focal_alpha",
                        "focal_gamma", "focal_clamp"},
                       "loss");
        c.loss = parse_loss_kind(loss.value("name", std::string("combined")));
        read(loss, "alpha", c.loss_params.alpha);
        read(loss, "beta", c.loss_params.beta);
        read(loss, "gamma", c.loss_params.gamma);
        read(loss, "delta", c.loss_params.delta);
        read(loss, "epsilon", c.loss_params.epsilon);
        c.loss_params.dice_variant = parse_dice_variant(loss.value("dice_variant", std::string("conventional")));
        read(loss, "focal_alpha", c.loss_params.focal_alpha);
        read(loss, "focal_gamma", c.loss_params.focal_gamma);
        read(loss, "focal_clamp", c.loss_params.focal_clamp);

        const json& net = section(root, "net");
        reject_unknown(net, {"in_channels", "base_width", "depth", "seed", "init"}, "net");
        read(net, "in_channels", c.net.in_channels);
        read(net, "base_width", c.net.base_width);
        read(net, "depth", c.net.depth);
        read(net, "seed", c.net.seed);
        const std::string init = net.value("init", std::string("he"));
        if (init != "he" && init != "zeros") {
            throw Error("config: net.init must be 'he' or 'zeros'");
        }
        c.zero_init = init == "zeros";

        const json& opt = section(root, "optimizer");
        reject_unknown(opt, {"lr", "beta1", "beta2", "eps"}, "optimizer");
        read(opt, "lr", c.lr);
        read(opt, "beta1", c.beta1);
        read(opt, "beta2", c.beta2);
        read(opt, "eps", c.eps_opt);

        read(root, "steps", c.steps);
        read(root, "batch_size", c.batch_size);
        read(root, "shuffle_seed", c.shuffle_seed);
        c.augment = parse_augment_mode(root.value("augment", std::string("none")));
        read(root, "augment_seed", c.augment_seed);
        read(root, "eval_threshold", c.eval_threshold);
        read(root, "eval_every", c.eval_every);
    } catch (const json::exception& e) {
        throw Error(std::string("run config: ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open config: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const auto base = std::filesystem::path(path).parent_path().string();
    return parse_run_config(buffer.str(), base.empty() ? "." : base);
}

}  // namespace contrail
