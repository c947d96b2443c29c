#pragma once

#include <string>
#include <utility>
#include <vector>

#include "contrail/grid.hpp"

namespace contrail {

// pixel = 1 iff p >= threshold.
[[nodiscard]] Mask binarize(const ProbMap& p, double threshold);

// |a & b| / |a | b|; two empty masks agree perfectly and score 1.
[[nodiscard]] double iou(const Mask& a, const Mask& b);

struct EvalCase {
    std::string scene_id;
    ProbMap prediction;
    Mask truth;
};

struct EvalReport {
    std::vector<std::pair<std::string, double>> per_image_iou;
    double mean_iou{0.0};    // macro: mean of per-image IoUs
    double global_iou{0.0};  // micro: pooled intersection / pooled union
    double threshold{0.5};

    // scene_id,iou rows followed by __mean__ and __global__ footers.
    [[nodiscard]] std::string to_csv() const;
};

[[nodiscard]] EvalReport evaluate_dataset(const std::vector<EvalCase>& cases, double threshold = 0.5);

}  // namespace contrail
