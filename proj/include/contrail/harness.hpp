#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "contrail/annotations.hpp"
#include "contrail/composite.hpp"
#include "contrail/grid.hpp"
#include "contrail/losses.hpp"
#include "contrail/metrics.hpp"
#include "contrail/nn.hpp"
#include "contrail/rng.hpp"
#include "contrail/synth.hpp"

namespace contrail {

// ---- configuration -------------------------------------------------------

enum class SourceKind { synthetic, real, directory };
enum class AugmentMode { none, rot90_flip };

[[nodiscard]] AugmentMode parse_augment_mode(std::string_view name);
[[nodiscard]] std::string_view to_string(AugmentMode mode) noexcept;

struct RunConfig {
    SourceKind source{SourceKind::synthetic};
    SynthParams synth{};
    std::size_t synth_count{25};
    std::string annotations_path;  // real
    std::string bandstack_dir;     // real
    ChannelRanges ranges{};        // real
    std::string dataset_dir;       // directory

    int target_size{64};
    double split_ratio{0.8};
    std::uint64_t split_seed{0};
    bool filter_empty{true};
    bool eval_include_empty{true};  // filtered-out empty scenes join the test side

    LossKind loss{LossKind::combined};
    LossParams loss_params{};
    nn::NetConfig net{};
    bool zero_init{false};
    double lr{1e-4};
    double beta1{0.9};
    double beta2{0.999};
    double eps_opt{1e-8};

    std::int64_t steps{3000};
    int batch_size{4};
    std::uint64_t shuffle_seed{0};
    AugmentMode augment{AugmentMode::none};
    std::uint64_t augment_seed{0};
    double eval_threshold{0.5};
    std::int64_t eval_every{100};

    // Throws Error describing the first violated invariant.
    void validate() const;
};

// JSON object with the keys documented in README.md; // and /* */ comments
// are accepted. Relative paths resolve against base_dir.
[[nodiscard]] RunConfig parse_run_config(std::string_view text, const std::string& base_dir = ".");
[[nodiscard]] RunConfig load_run_config(const std::string& path);

// ---- splitting -----------------------------------------------------------

template <class T>
struct Split {
    std::vector<T> train;
    std::vector<T> test;
    std::vector<T> dropped;  // records removed by the empty filter
};

// Number of training records for n records at the given ratio: floor(ratio n).
// A 1e-9 slack absorbs binary representation error (0.57 * 100 is 56.999...).
[[nodiscard]] inline std::size_t train_count(std::size_t n, double ratio) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

// Seeded Fisher-Yates permutation of 0..n-1.
[[nodiscard]] std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed, std::uint64_t stream = 0);

// Optionally drops records without a contrail, shuffles with the seed and
// puts the first floor(ratio n) records in train, the rest in test.
template <class T>
Split<T> split_dataset(std::vector<T> records, double ratio, std::uint64_t seed, bool filter_empty) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw Error("split_dataset: ratio must lie in (0, 1)");
    }
    Split<T> out;
    std::vector<T> kept;
    kept.reserve(records.size());
    for (auto& r : records) {
        if (filter_empty && !has_contrail(r)) {
            out.dropped.push_back(std::move(r));
        } else {
            kept.push_back(std::move(r));
        }
    }
    if (kept.size() < 2) {
        throw Error("split_dataset: need at least 2 records after filtering, have " + std::to_string(kept.size()));
    }
    const auto order = seeded_permutation(kept.size(), seed);
    const std::size_t n_train = train_count(kept.size(), ratio);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? out.train : out.test).push_back(std::move(kept[order[i]]));
    }
    return out;
}

// ---- augmentation --------------------------------------------------------

// Dihedral group of the square: element e applies e % 4 counter-clockwise
// quarter turns, then a left-right mirror when e >= 4.
[[nodiscard]] int dihedral_inverse(int element);
[[nodiscard]] ImagePlane apply_dihedral(const ImagePlane& img, int element);
[[nodiscard]] Mask apply_dihedral(const Mask& mask, int element);

// none: identity. rot90_flip: one uniformly drawn dihedral element (from the
// seed) applied to both image and mask. Non-square input is an error there.
[[nodiscard]] std::pair<ImagePlane, Mask> augment_pair(const ImagePlane& img, const Mask& mask, AugmentMode mode,
                                                       std::uint64_t seed);

// ---- tensors <-> grids ---------------------------------------------------

[[nodiscard]] nn::Tensor to_tensor(std::span<const ImagePlane> images);
[[nodiscard]] ProbMap to_prob_map(const nn::Tensor& probs, int index);

// ---- training ------------------------------------------------------------

// Deterministic batch order: successive seeded permutations of the training
// indices, consumed batch_size at a time across epoch boundaries.
class BatchScheduler {
public:
    BatchScheduler(std::size_t n, int batch_size, std::uint64_t seed);
    [[nodiscard]] std::vector<std::size_t> next();

private:
    std::size_t n_;
    int batch_size_;
    std::uint64_t seed_;
    std::uint64_t epoch_{0};
    std::vector<std::size_t> order_;
    std::size_t cursor_{0};
};

// Seed for the augmentation of one batch slot.
[[nodiscard]] std::uint64_t augment_seed_for(std::uint64_t base, std::int64_t step, int slot);

struct PreparedData {
    std::vector<Sample> train;
    std::vector<Sample> test;
};

// Loads/generates the configured source, resizes to target_size and splits.
[[nodiscard]] PreparedData prepare_data(const RunConfig& config);

struct TrainResult {
    nn::UNet net;
    nn::AdamState optimizer;
    std::string log_csv;  // step,loss,train_iou
    double final_train_iou{0.0};
};

[[nodiscard]] TrainResult train(const RunConfig& config, const std::vector<Sample>& train_set);

// Macro/micro IoU of the network's binarized predictions.
[[nodiscard]] EvalReport evaluate(const nn::UNet& net, const std::vector<Sample>& dataset, double threshold);

// Side-by-side H x 4W RGB panel: input, ground truth, prediction and the
// disagreement map (false positives red, false negatives blue).
[[nodiscard]] ImagePlane render_overlay(const ImagePlane& img, const Mask& ground_truth, const Mask& prediction);

// ---- on-disk datasets ----------------------------------------------------

// Band stacks are looked up as <bandstack_dir>/<scene_id>.bstk.
[[nodiscard]] std::vector<Sample> prepare_scenes(const std::vector<SceneRecord>& records,
                                                 const std::string& bandstack_dir, int target_size,
                                                 const ChannelRanges& ranges = {});

// Writes images/<id>.png, masks/<id>.png and manifest.csv (scene_id,image,mask).
void write_dataset(const std::string& dir, const std::vector<Sample>& samples);
[[nodiscard]] std::vector<Sample> read_dataset(const std::string& dir);

}  // namespace contrail
