#include "contrail/metrics.hpp"

#include <cstdint>

#include <fmt/format.h>

namespace contrail {
namespace {

struct Counts {
    std::uint64_t intersection{0};
    std::uint64_t union_{0};
};

Counts overlap_counts(const Mask& a, const Mask& b) {
    require_same_shape(a, b, "iou");
    Counts c;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const bool x = a.data[i] != 0;
        const bool y = b.data[i] != 0;
        c.intersection += static_cast<std::uint64_t>(x && y);
        c.union_ += static_cast<std::uint64_t>(x || y);
    }
    return c;
}

double ratio(const Counts& c) {
    return c.union_ == 0 ? 1.0 : static_cast<double>(c.intersection) / static_cast<double>(c.union_);
}

}  // namespace

Mask binarize(const ProbMap& p, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw Error("binarize: threshold must lie in (0, 1)");
    }
    Mask m(p.height, p.width);
    for (std::size_t i = 0; i < p.data.size(); ++i) {
        m.data[i] = p.data[i] >= threshold ? 1 : 0;
    }
    return m;
}

double iou(const Mask& a, const Mask& b) { return ratio(overlap_counts(a, b)); }

EvalReport evaluate_dataset(const std::vector<EvalCase>& cases, double threshold) {
    if (cases.empty()) {
        throw Error("evaluate_dataset: empty dataset");
    }
    EvalReport report;
    report.threshold = threshold;
    Counts pooled;
    double sum = 0.0;
    for (const auto& c : cases) {
        const Counts counts = overlap_counts(binarize(c.prediction, threshold), c.truth);
        const double v = ratio(counts);
        report.per_image_iou.emplace_back(c.scene_id, v);
        sum += v;
        pooled.intersection += counts.intersection;
        pooled.union_ += counts.union_;
    }
    report.mean_iou = sum / static_cast<double>(cases.size());
    report.global_iou = ratio(pooled);
    return report;
}

std::string EvalReport::to_csv() const {
    std::string out = "scene_id,iou\n";
    for (const auto& [id, v] : per_image_iou) {
        out += fmt::format("{},{:.6f}\n", id, v);
    }
    out += fmt::format("__mean__,{:.6f}\n", mean_iou);
    out += fmt::format("__global__,{:.6f}\n", global_iou);
    return out;
}

}  // namespace contrail
