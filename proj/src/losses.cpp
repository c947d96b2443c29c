#include "contrail/losses.hpp"

#include <algorithm>
#include <cmath>

namespace contrail {
namespace {

// Below this, (1 - TI)^(1/gamma - 1) is treated as the singular optimum.
constexpr double kFocalTverskyGuard = 1e-12;

void check(const ProbMap& p, const Mask& g, const char* context) {
    require_same_shape(p, g, context);
    if (p.data.size() != g.data.size()) {
        throw ShapeError(std::string(context) + ": buffer size mismatch");
    }
}

// Tversky index pieces shared by tversky and focal-Tversky.
struct TverskyTerms {
    double num;      // S_tp + eps
    double den;      // S_tp + alpha S_fn + beta S_fp + eps
    double penalty;  // alpha S_fn + beta S_fp, so 1 - TI = penalty / den
};

TverskyTerms tversky_terms(const OverlapSums& s, const LossParams& params) {
    const double penalty = params.alpha * s.fn + params.beta * s.fp;
    return {s.tp + params.epsilon, s.tp + penalty + params.epsilon, penalty};
}

// d(1 - TI)/dp_i written into grad, scaled by `scale`.
void tversky_complement_grad(const ProbMap& p, const Mask& g, const LossParams& params, const TverskyTerms& t,
                             double scale, std::vector<double>& grad) {
    const double inv_den2 = 1.0 / (t.den * t.den);
    for (std::size_t i = 0; i < p.data.size(); ++i) {
        const double gi = g.data[i];
        const double d_den = gi - params.alpha * gi + params.beta * (1.0 - gi);
        const double d_ti = (gi * t.den - t.num * d_den) * inv_den2;
        grad[i] = -d_ti * scale;
    }
}

}  // namespace

LossKind parse_loss_kind(std::string_view name) {
    if (name == "dice") return LossKind::dice;
    if (name == "jaccard") return LossKind::jaccard;
    if (name == "tversky") return LossKind::tversky;
    if (name == "focal_tversky") return LossKind::focal_tversky;
    if (name == "focal") return LossKind::focal;
    if (name == "combined") return LossKind::combined;
    throw Error("unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(LossKind kind) noexcept {
    switch (kind) {
        case LossKind::dice: return "dice";
        case LossKind::jaccard: return "jaccard";
        case LossKind::tversky: return "tversky";
        case LossKind::focal_tversky: return "focal_tversky";
        case LossKind::focal: return "focal";
        case LossKind::combined: return "combined";
    }
    return "unknown";
}

DiceVariant parse_dice_variant(std::string_view name) {
    if (name == "conventional") return DiceVariant::conventional;
    if (name == "verbatim") return DiceVariant::verbatim;
    throw Error("unknown dice variant '" + std::string(name) + "'");
}

std::string_view to_string(DiceVariant variant) noexcept {
    return variant == DiceVariant::conventional ? "conventional" : "verbatim";
}

void LossParams::validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw Error("loss params: alpha and beta must be >= 0");
    if (!(gamma > 0.0)) throw Error("loss params: gamma must be > 0");
    if (!(delta >= 0.0 && delta <= 1.0)) throw Error("loss params: delta must lie in [0, 1]");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw Error("loss params: epsilon must be >= 0");
    if (!(focal_alpha >= 0.0 && focal_alpha <= 1.0)) throw Error("loss params: focal_alpha must lie in [0, 1]");
    if (!(focal_gamma >= 0.0)) throw Error("loss params: focal_gamma must be >= 0");
    if (!(focal_clamp > 0.0 && focal_clamp < 0.5)) throw Error("loss params: focal_clamp must lie in (0, 0.5)");
}

OverlapSums overlap_sums(const ProbMap& p, const Mask& g) {
    check(p, g, "overlap_sums");
    OverlapSums s;
    for (std::size_t i = 0; i < p.data.size(); ++i) {
        const double pi = p.data[i];
        const double gi = g.data[i];
        s.tp += pi * gi;
        s.fn += (1.0 - pi) * gi;
        s.fp += pi * (1.0 - gi);
        s.p += pi;
        s.g += gi;
    }
    return s;
}

LossResult dice_loss(const ProbMap& p, const Mask& g, const LossParams& params) {
    check(p, g, "dice_loss");
    const OverlapSums s = overlap_sums(p, g);
    const double k = params.dice_variant == DiceVariant::conventional ? 2.0 : 1.0;
    const double num = k * s.tp + params.epsilon;
    const double den = s.p + s.g + params.epsilon;

    LossResult r;
    r.value = 1.0 - num / den;
    r.grad.resize(p.data.size());
    const double inv_den2 = 1.0 / (den * den);
    for (std::size_t i = 0; i < p.data.size(); ++i) {
        // d(num/den)/dp_i = (k g_i den - num) / den^2
        r.grad[i] = -(k * g.data[i] * den - num) * inv_den2;
    }
    return r;
}

LossResult tversky_loss(const ProbMap& p, const Mask& g, const LossParams& params) {
    check(p, g, "tversky_loss");
    const TverskyTerms t = tversky_terms(overlap_sums(p, g), params);
    LossResult r;
    r.value = t.penalty / t.den;
    r.grad.resize(p.data.size());
    tversky_complement_grad(p, g, params, t, 1.0, r.grad);
    return r;
}

LossResult focal_tversky_loss(const ProbMap& p, const Mask& g, const LossParams& params) {
    check(p, g, "focal_tversky_loss");
    const TverskyTerms t = tversky_terms(overlap_sums(p, g), params);
    const double u = std::max(0.0, t.penalty / t.den);  // 1 - TI
    const double exponent = 1.0 / params.gamma;

    LossResult r;
    r.value = std::pow(u, exponent);
    r.grad.assign(p.data.size(), 0.0);
    if (exponent < 1.0 && u < kFocalTverskyGuard) {
        return r;
    }
    const double outer = exponent * std::pow(u, exponent - 1.0);
    tversky_complement_grad(p, g, params, t, outer, r.grad);
    return r;
}

LossResult jaccard_loss(const ProbMap& p, const Mask& g, const LossParams& params) {
    check(p, g, "jaccard_loss");
    const OverlapSums s = overlap_sums(p, g);
    const double num = s.tp + params.epsilon;
    const double den = s.p + s.g - s.tp + params.epsilon;

    LossResult r;
    r.value = 1.0 - num / den;
    r.grad.resize(p.data.size());
    const double inv_den2 = 1.0 / (den * den);
    for (std::size_t i = 0; i < p.data.size(); ++i) {
        const double gi = g.data[i];
        r.grad[i] = -(gi * den - num * (1.0 - gi)) * inv_den2;
    }
    return r;
}

LossResult focal_loss(const ProbMap& p, const Mask& g, const LossParams& params) {
    check(p, g, "focal_loss");
    const double a = params.focal_alpha;
    const double gm = params.focal_gamma;
    const double lo = params.focal_clamp;
    const double hi = 1.0 - params.focal_clamp;
    const double inv_n = 1.0 / static_cast<double>(p.data.size());

    LossResult r;
    r.grad.assign(p.data.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < p.data.size(); ++i) {
        const double raw = p.data[i];
        const double q = std::clamp(raw, lo, hi);
        const double gi = g.data[i];
        const double log_q = std::log(q);
        const double log_1q = std::log1p(-q);
        const double w_pos = std::pow(1.0 - q, gm);  // (1 - p)^gamma
        const double w_neg = std::pow(q, gm);        // p^gamma
        total += -a * w_pos * gi * log_q - (1.0 - a) * w_neg * (1.0 - gi) * log_1q;

        if (raw <= lo || raw >= hi) {
            continue;  // clamped: locally constant
        }
        // gamma * x^(gamma - 1), written to stay finite at gamma = 0
        const double dw_pos = gm == 0.0 ? 0.0 : -gm * std::pow(1.0 - q, gm - 1.0);
        const double dw_neg = gm == 0.0 ? 0.0 : gm * std::pow(q, gm - 1.0);
        const double d_pos = -a * gi * (dw_pos * log_q + w_pos / q);
        const double d_neg = -(1.0 - a) * (1.0 - gi) * (dw_neg * log_1q - w_neg / (1.0 - q));
        r.grad[i] = (d_pos + d_neg) * inv_n;
    }
    r.value = total * inv_n;
    return r;
}

LossResult combined_loss(const ProbMap& p, const Mask& g, const LossParams& params) {
    check(p, g, "combined_loss");
    const LossResult dice = dice_loss(p, g, params);
    const LossResult ft = focal_tversky_loss(p, g, params);
    const double d = params.delta;
    LossResult r;
    r.value = d * dice.value + (1.0 - d) * ft.value;
    r.grad.resize(p.data.size());
    for (std::size_t i = 0; i < r.grad.size(); ++i) {
        r.grad[i] = d * dice.grad[i] + (1.0 - d) * ft.grad[i];
    }
    return r;
}

LossResult compute_loss(LossKind kind, const ProbMap& p, const Mask& g, const LossParams& params) {
    switch (kind) {
        case LossKind::dice: return dice_loss(p, g, params);
        case LossKind::jaccard: return jaccard_loss(p, g, params);
        case LossKind::tversky: return tversky_loss(p, g, params);
        case LossKind::focal_tversky: return focal_tversky_loss(p, g, params);
        case LossKind::focal: return focal_loss(p, g, params);
        case LossKind::combined: return combined_loss(p, g, params);
    }
    throw Error("compute_loss: unhandled loss kind");
}

BatchLoss batch_loss(LossKind kind, std::span<const ProbMap> probs, std::span<const Mask> masks,
                     const LossParams& params) {
    if (probs.size() != masks.size() || probs.empty()) {
        throw ShapeError("batch_loss: need equally many (nonzero) predictions and masks");
    }
    const double inv_b = 1.0 / static_cast<double>(probs.size());
    BatchLoss out;
    out.grads.reserve(probs.size());
    for (std::size_t b = 0; b < probs.size(); ++b) {
        LossResult r = compute_loss(kind, probs[b], masks[b], params);
        out.value += r.value * inv_b;
        for (double& v : r.grad) {
            v *= inv_b;
        }
        out.grads.push_back(std::move(r.grad));
    }
    return out;
}

std::vector<double> finite_difference_gradient(const LossFunction& loss_fn, const ProbMap& p, const Mask& g,
                                               const LossParams& params, double h) {
    if (!(h > 0.0)) {
        throw Error("finite_difference_gradient: h must be positive");
    }
    check(p, g, "finite_difference_gradient");
    ProbMap probe = p;
    std::vector<double> grad(p.data.size());
    for (std::size_t i = 0; i < p.data.size(); ++i) {
        const double saved = probe.data[i];
        probe.data[i] = saved + h;
        const double up = loss_fn(probe, g, params).value;
        probe.data[i] = saved - h;
        const double down = loss_fn(probe, g, params).value;
        probe.data[i] = saved;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

}  // namespace contrail
