#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "contrail/grid.hpp"

namespace contrail {

enum class DiceVariant {
    conventional,  // 1 - (2 S_tp + eps) / (S_p + S_g + eps)
    verbatim,      // 1 - (S_tp + eps) / (S_p + S_g + eps), no factor 2
};

enum class LossKind { dice, jaccard, tversky, focal_tversky, focal, combined };

[[nodiscard]] LossKind parse_loss_kind(std::string_view name);
[[nodiscard]] std::string_view to_string(LossKind kind) noexcept;
[[nodiscard]] DiceVariant parse_dice_variant(std::string_view name);
[[nodiscard]] std::string_view to_string(DiceVariant variant) noexcept;

/// Hyperparameters of the region losses.
///
/// alpha weights false negatives and beta false positives inside the Tversky
/// index; the focal-Tversky term raises (1 - TI) to 1/gamma. delta mixes the
/// Dice term against focal-Tversky in the combined loss. The focal_* fields
/// belong to the pixelwise focal loss only.
struct LossParams {
    double alpha{0.7};
    double beta{0.3};
    double gamma{4.0 / 3.0};
    double delta{0.5};
    double epsilon{1e-6};
    DiceVariant dice_variant{DiceVariant::conventional};

    double focal_alpha{0.25};
    double focal_gamma{2.0};
    double focal_clamp{1e-7};

    // Throws Error when any field is out of its domain.
    void validate() const;
};

struct LossResult {
    double value{0.0};
    std::vector<double> grad;  // d value / d p, row-major like the ProbMap
};

// Region sums over a (p, g) pair, accumulated in row-major order.
struct OverlapSums {
    double tp{0.0};  // sum p g
    double fn{0.0};  // sum (1 - p) g
    double fp{0.0};  // sum p (1 - g)
    double p{0.0};   // sum p
    double g{0.0};   // sum g
};

[[nodiscard]] OverlapSums overlap_sums(const ProbMap& p, const Mask& g);

[[nodiscard]] LossResult dice_loss(const ProbMap& p, const Mask& g, const LossParams& params);
[[nodiscard]] LossResult tversky_loss(const ProbMap& p, const Mask& g, const LossParams& params);
[[nodiscard]] LossResult focal_tversky_loss(const ProbMap& p, const Mask& g, const LossParams& params);
[[nodiscard]] LossResult jaccard_loss(const ProbMap& p, const Mask& g, const LossParams& params);
[[nodiscard]] LossResult focal_loss(const ProbMap& p, const Mask& g, const LossParams& params);

// delta * dice + (1 - delta) * focal_tversky, with the single contrail class.
[[nodiscard]] LossResult combined_loss(const ProbMap& p, const Mask& g, const LossParams& params);

[[nodiscard]] LossResult compute_loss(LossKind kind, const ProbMap& p, const Mask& g, const LossParams& params);

/// Mean of per-image losses over a batch. grads[i] already carries the 1/B factor.
struct BatchLoss {
    double value{0.0};
    std::vector<std::vector<double>> grads;
};

[[nodiscard]] BatchLoss batch_loss(LossKind kind, std::span<const ProbMap> probs, std::span<const Mask> masks,
                                   const LossParams& params);

using LossFunction = std::function<LossResult(const ProbMap&, const Mask&, const LossParams&)>;

// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h for every pixel i.
[[nodiscard]] std::vector<double> finite_difference_gradient(const LossFunction& loss_fn, const ProbMap& p,
                                                             const Mask& g, const LossParams& params, double h);

}  // namespace contrail
