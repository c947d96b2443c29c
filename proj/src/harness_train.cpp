#include <numeric>

#include <fmt/format.h>

#include "contrail/harness.hpp"
#include "contrail/raster.hpp"

namespace contrail {
namespace {

// One counter-clockwise quarter turn of a square grid: out(r, c) = in(c, n-1-r).
template <class Get, class Set>
void rotate_ccw(int n, Get get, Set set) {
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            set(r, c, get(c, n - 1 - r));
        }
    }
}

ImagePlane rotate_ccw(const ImagePlane& img) {
    ImagePlane out(img.height, img.width, img.channels);
    for (int ch = 0; ch < img.channels; ++ch) {
        rotate_ccw(
            img.height, [&](int r, int c) { return img.at(r, c, ch); },
            [&](int r, int c, float v) { out.at(r, c, ch) = v; });
    }
    return out;
}

Mask rotate_ccw(const Mask& m) {
    Mask out(m.height, m.width);
    rotate_ccw(m.height, [&](int r, int c) { return m.at(r, c); }, [&](int r, int c, std::uint8_t v) { out.at(r, c) = v; });
    return out;
}

ImagePlane mirror(const ImagePlane& img) {
    ImagePlane out(img.height, img.width, img.channels);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            for (int ch = 0; ch < img.channels; ++ch) {
                out.at(r, c, ch) = img.at(r, img.width - 1 - c, ch);
            }
        }
    }
    return out;
}

Mask mirror(const Mask& m) {
    Mask out(m.height, m.width);
    for (int r = 0; r < m.height; ++r) {
        for (int c = 0; c < m.width; ++c) {
            out.at(r, c) = m.at(r, m.width - 1 - c);
        }
    }
    return out;
}

template <class Grid>
Grid dihedral(const Grid& g, int element) {
    if (element < 0 || element > 7) {
        throw Error("dihedral element must lie in [0, 7]");
    }
    if (g.height != g.width) {
        throw ShapeError("dihedral transforms need a square grid, got " + std::to_string(g.height) + "x" +
                         std::to_string(g.width));
    }
    Grid out = g;
    for (int k = 0; k < element % 4; ++k) {
        out = rotate_ccw(out);
    }
    if (element >= 4) {
        out = mirror(out);
    }
    return out;
}

double mean_train_iou(const nn::UNet& net, const std::vector<Sample>& set, double threshold) {
    return evaluate(net, set, threshold).mean_iou;
}

std::vector<Sample> resize_all(std::vector<Sample> samples, int size) {
    for (auto& s : samples) {
        s.image = resize_image(s.image, size, size);
        s.mask = resize_mask(s.mask, size, size);
    }
    return samples;
}

}  // namespace

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed, std::uint64_t stream) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed, stream);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(i - 1)));
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

int dihedral_inverse(int element) {
    if (element < 0 || element > 7) {
        throw Error("dihedral element must lie in [0, 7]");
    }
    return element < 4 ? (4 - element) % 4 : element;
}

ImagePlane apply_dihedral(const ImagePlane& img, int element) { return dihedral(img, element); }
Mask apply_dihedral(const Mask& mask, int element) { return dihedral(mask, element); }

std::pair<ImagePlane, Mask> augment_pair(const ImagePlane& img, const Mask& mask, AugmentMode mode,
                                         std::uint64_t seed) {
    require_same_shape(img, mask, "augment_pair");
    if (mode == AugmentMode::none) {
        return {img, mask};
    }
    if (img.height != img.width) {
        throw ShapeError("augment_pair: rot90_flip needs square inputs");
    }
    Rng rng(seed, 0x617567ULL);
    const int element = static_cast<int>(rng.integer(0, 7));
    return {apply_dihedral(img, element), apply_dihedral(mask, element)};
}

nn::Tensor to_tensor(std::span<const ImagePlane> images) {
    if (images.empty()) {
        throw ShapeError("to_tensor: empty batch");
    }
    const ImagePlane& first = images.front();
    nn::Tensor t(nn::Shape{static_cast<int>(images.size()), first.channels, first.height, first.width});
    for (std::size_t b = 0; b < images.size(); ++b) {
        const ImagePlane& img = images[b];
        if (img.height != first.height || img.width != first.width || img.channels != first.channels) {
            throw ShapeError("to_tensor: images in a batch must share their shape");
        }
        for (int ch = 0; ch < img.channels; ++ch) {
            float* plane = t.plane(static_cast<int>(b), ch);
            for (int r = 0; r < img.height; ++r) {
                for (int c = 0; c < img.width; ++c) {
                    plane[static_cast<std::size_t>(r) * img.width + c] = img.at(r, c, ch);
                }
            }
        }
    }
    return t;
}

ProbMap to_prob_map(const nn::Tensor& probs, int index) {
    const nn::Shape& s = probs.shape();
    if (s.c != 1 || index < 0 || index >= s.n) {
        throw ShapeError("to_prob_map: expected a single-channel output and a valid batch index");
    }
    ProbMap p(s.h, s.w);
    const float* src = probs.plane(index, 0);
    std::copy(src, src + s.plane(), p.data.begin());
    return p;
}

BatchScheduler::BatchScheduler(std::size_t n, int batch_size, std::uint64_t seed)
    : n_(n), batch_size_(batch_size), seed_(seed) {
    if (n == 0 || batch_size < 1) {
        throw Error("BatchScheduler: need a nonempty training set and batch_size >= 1");
    }
}

std::vector<std::size_t> BatchScheduler::next() {
    std::vector<std::size_t> batch;
    batch.reserve(static_cast<std::size_t>(batch_size_));
    while (batch.size() < static_cast<std::size_t>(batch_size_)) {
        if (cursor_ == order_.size()) {
            order_ = seeded_permutation(n_, seed_, epoch_++);
            cursor_ = 0;
        }
        batch.push_back(order_[cursor_++]);
    }
    return batch;
}

std::uint64_t augment_seed_for(std::uint64_t base, std::int64_t step, int slot) {
    // splitmix64 finalizer over the (base, step, slot) triple
    std::uint64_t z = base ^ (static_cast<std::uint64_t>(step) * 0x9E3779B97F4A7C15ULL) ^
                      (static_cast<std::uint64_t>(slot) * 0xBF58476D1CE4E5B9ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

PreparedData prepare_data(const RunConfig& config) {
    config.validate();
    PreparedData out;
    auto finish = [&](auto split, auto to_samples) {
        out.train = to_samples(std::move(split.train));
        out.test = to_samples(std::move(split.test));
        if (config.eval_include_empty) {
            auto extra = to_samples(std::move(split.dropped));
            for (auto& s : extra) {
                out.test.push_back(std::move(s));
            }
        }
    };
    switch (config.source) {
        case SourceKind::synthetic: {
            auto samples = generate_dataset(config.synth, config.synth_count);
            finish(split_dataset(std::move(samples), config.split_ratio, config.split_seed, config.filter_empty),
                   [&](std::vector<Sample> v) { return resize_all(std::move(v), config.target_size); });
            break;
        }
        case SourceKind::real: {
            auto records = load_scene_records(config.annotations_path);
            finish(split_dataset(std::move(records), config.split_ratio, config.split_seed, config.filter_empty),
                   [&](const std::vector<SceneRecord>& v) {
                       return prepare_scenes(v, config.bandstack_dir, config.target_size, config.ranges);
                   });
            break;
        }
        case SourceKind::directory: {
            auto samples = read_dataset(config.dataset_dir);
            finish(split_dataset(std::move(samples), config.split_ratio, config.split_seed, config.filter_empty),
                   [&](std::vector<Sample> v) { return resize_all(std::move(v), config.target_size); });
            break;
        }
    }
    return out;
}

TrainResult train(const RunConfig& config, const std::vector<Sample>& train_set) {
    config.validate();
    if (train_set.empty()) {
        throw Error("train: empty training set");
    }
    for (const auto& s : train_set) {
        config.net.check_input(nn::Shape{1, s.image.channels, s.image.height, s.image.width});
        require_same_shape(s.image, s.mask, "train");
    }

    TrainResult result{nn::init_params(config.net), nn::AdamState{}, "step,loss,train_iou\n", 0.0};
    if (config.zero_init) {
        result.net.set_zero();
    }
    nn::AdamState& opt = result.optimizer;
    opt.lr = config.lr;
    opt.beta1 = config.beta1;
    opt.beta2 = config.beta2;
    opt.eps = config.eps_opt;

    BatchScheduler scheduler(train_set.size(), config.batch_size, config.shuffle_seed);
    std::vector<ImagePlane> images(static_cast<std::size_t>(config.batch_size));
    std::vector<Mask> masks(static_cast<std::size_t>(config.batch_size));
    std::vector<ProbMap> probs(static_cast<std::size_t>(config.batch_size));

    for (std::int64_t step = 0; step < config.steps; ++step) {
        const auto batch = scheduler.next();
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const Sample& s = train_set[batch[b]];
            auto [img, mask] = augment_pair(s.image, s.mask, config.augment,
                                            augment_seed_for(config.augment_seed, step, static_cast<int>(b)));
            images[b] = std::move(img);
            masks[b] = std::move(mask);
        }
        const nn::ForwardPass pass = result.net.forward(to_tensor(images));
        for (std::size_t b = 0; b < batch.size(); ++b) {
            probs[b] = to_prob_map(pass.probs, static_cast<int>(b));
        }
        const BatchLoss loss = batch_loss(config.loss, probs, masks, config.loss_params);

        nn::Tensor grad(pass.probs.shape());
        for (std::size_t b = 0; b < batch.size(); ++b) {
            float* dst = grad.plane(static_cast<int>(b), 0);
            for (std::size_t i = 0; i < loss.grads[b].size(); ++i) {
                dst[i] = static_cast<float>(loss.grads[b][i]);
            }
        }
        const auto grads = result.net.backward(pass, grad);
        nn::adam_step(result.net, grads, opt);

        const bool report = (step + 1) % config.eval_every == 0 || step + 1 == config.steps;
        if (report) {
            result.final_train_iou = mean_train_iou(result.net, train_set, config.eval_threshold);
            result.log_csv += fmt::format("{},{:.9g},{:.6f}\n", step, loss.value, result.final_train_iou);
        } else {
            result.log_csv += fmt::format("{},{:.9g},\n", step, loss.value);
        }
    }
    if (config.steps == 0) {
        result.final_train_iou = mean_train_iou(result.net, train_set, config.eval_threshold);
    }
    return result;
}

EvalReport evaluate(const nn::UNet& net, const std::vector<Sample>& dataset, double threshold) {
    if (dataset.empty()) {
        throw Error("evaluate: empty dataset");
    }
    std::vector<EvalCase> cases;
    cases.reserve(dataset.size());
    for (const auto& s : dataset) {
        require_same_shape(s.image, s.mask, "evaluate");
        const nn::Tensor probs = net.predict(to_tensor(std::span<const ImagePlane>(&s.image, 1)));
        cases.push_back({s.scene_id, to_prob_map(probs, 0), s.mask});
    }
    return evaluate_dataset(cases, threshold);
}

ImagePlane render_overlay(const ImagePlane& img, const Mask& ground_truth, const Mask& prediction) {
    require_same_shape(img, ground_truth, "render_overlay");
    require_same_shape(ground_truth, prediction, "render_overlay");
    if (img.channels != 1 && img.channels != 3) {
        throw ShapeError("render_overlay: image must have 1 or 3 channels");
    }
    const int h = img.height;
    const int w = img.width;
    ImagePlane out(h, 4 * w, 3);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (int ch = 0; ch < 3; ++ch) {
                out.at(r, c, ch) = img.at(r, c, img.channels == 3 ? ch : 0);
                out.at(r, w + c, ch) = ground_truth.at(r, c) ? 1.0F : 0.0F;
                out.at(r, 2 * w + c, ch) = prediction.at(r, c) ? 1.0F : 0.0F;
            }
            const bool g = ground_truth.at(r, c) != 0;
            const bool p = prediction.at(r, c) != 0;
            out.at(r, 3 * w + c, 0) = (p && !g) ? 1.0F : 0.0F;  // false positive
            out.at(r, 3 * w + c, 2) = (g && !p) ? 1.0F : 0.0F;  // false negative
        }
    }
    return out;
}

}  // namespace contrail
