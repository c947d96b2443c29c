#include "contrail/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "contrail/harness.hpp"
#include "contrail/rng.hpp"

namespace contrail {
namespace {

struct NamedLoss {
    std::string name;
    LossFunction fn;
    LossParams params;
};

std::vector<NamedLoss> loss_zoo() {
    LossParams conventional;
    LossParams verbatim;
    verbatim.dice_variant = DiceVariant::verbatim;
    return {
        {"dice (conventional)", dice_loss, conventional},
        {"dice (verbatim)", dice_loss, verbatim},
        {"jaccard", jaccard_loss, conventional},
        {"tversky", tversky_loss, conventional},
        {"focal_tversky", focal_tversky_loss, conventional},
        {"focal", focal_loss, conventional},
        {"combined (conventional)", combined_loss, conventional},
        {"combined (verbatim)", combined_loss, verbatim},
    };
}

// True when two forward passes took the same ReLU and max-pool branches.
template <class A, class B>
bool same_branches(const nn::BasicForwardPass<A>& a, const nn::BasicForwardPass<B>& b) {
    for (std::size_t l = 0; l < a.conv_outputs.size(); ++l) {
        auto x = a.conv_outputs[l].values();
        auto y = b.conv_outputs[l].values();
        for (std::size_t i = 0; i < x.size(); ++i) {
            if ((x[i] > A(0)) != (y[i] > B(0))) {
                return false;
            }
        }
    }
    for (std::size_t l = 0; l < a.pools.size(); ++l) {
        if (a.pools[l].argmax != b.pools[l].argmax) {
            return false;
        }
    }
    return true;
}

}  // namespace

double relative_error(double a, double b, double floor) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

std::vector<GradCheckResult> check_loss_gradients(const LossGradCheckOptions& options) {
    std::vector<GradCheckResult> results;
    for (const auto& loss : loss_zoo()) {
        GradCheckResult r{loss.name, 0, 0, 0.0, options.tolerance, 0, {}};
        Rng rng(options.seed);
        for (int t = 0; t < options.trials; ++t) {
            ProbMap p(options.height, options.width);
            Mask g(options.height, options.width);
            for (auto& v : p.data) {
                v = rng.uniform(0.01, 0.99);
            }
            for (auto& v : g.data) {
                v = rng.uniform() < 0.4 ? 1 : 0;
            }
            const LossResult analytic = loss.fn(p, g, loss.params);
            const auto numeric = finite_difference_gradient(loss.fn, p, g, loss.params, options.h);
            for (std::size_t i = 0; i < numeric.size(); ++i) {
                r.max_rel_error = std::max(r.max_rel_error, relative_error(analytic.grad[i], numeric[i]));
            }
            ++r.cases;
        }
        results.push_back(std::move(r));
    }
    return results;
}

namespace {

template <class T>
ProbMap probs_of(const nn::BasicTensor<T>& probs) {
    ProbMap p(probs.shape().h, probs.shape().w);
    std::copy(probs.data(), probs.data() + p.data.size(), p.data.begin());
    return p;
}

}  // namespace

GradCheckResult check_network_gradients(const NetGradCheckOptions& options) {
    const nn::UNet net = nn::init_params(options.net);
    Rng rng(options.data_seed);
    nn::Tensor x(nn::Shape{1, options.net.in_channels, options.size, options.size});
    for (float& v : x.values()) {
        v = static_cast<float>(rng.uniform());
    }
    Mask g(options.size, options.size);
    for (int r = 0; r < options.size; ++r) {
        for (int c = 0; c < options.size; ++c) {
            g.at(r, c) = (std::abs(r - c) <= 2 || rng.uniform() < 0.05) ? 1 : 0;
        }
    }

    const nn::ForwardPass base = net.forward(x);
    const LossResult base_loss = combined_loss(probs_of(base.probs), g, options.loss);
    nn::Tensor grad_probs(base.probs.shape());
    for (std::size_t i = 0; i < base_loss.grad.size(); ++i) {
        grad_probs.data()[i] = static_cast<float>(base_loss.grad[i]);
    }
    const auto analytic = net.backward(base, grad_probs);

    // Differences are taken on a 64-bit copy carrying the same weights, so
    // the stencil is not swamped by float32 rounding of the loss.
    nn::UNetD ref = net.cast<double>();
    const nn::TensorD xd = x.cast<double>();
    const nn::BasicForwardPass<double> ref_base = ref.forward(xd);

    GradCheckResult r{"network (combined loss)", 0, 0, 0.0, options.tolerance, 0, {}};
    if (!same_branches(base, ref_base)) {
        return r;
    }
    auto& params = ref.mutable_parameters();
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto values = params[k].value.values();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + options.h;
            const auto plus = ref.forward(xd);
            values[i] = saved - options.h;
            const auto minus = ref.forward(xd);
            values[i] = saved;
            if (!same_branches(plus, ref_base) || !same_branches(minus, ref_base)) {
                ++r.skipped;
                continue;
            }
            const double numeric = (combined_loss(probs_of(plus.probs), g, options.loss).value -
                                    combined_loss(probs_of(minus.probs), g, options.loss).value) /
                                   (2.0 * options.h);
            const double a = analytic[k].values()[i];
            const double e = relative_error(a, numeric);
            if (e >= options.tolerance) {
                ++r.over_tolerance;
            }
            if (e > r.max_rel_error) {
                r.max_rel_error = e;
                r.worst = fmt::format("{}[{}] analytic={:.4e} numeric={:.4e}", params[k].name, i, a, numeric);
            }
            ++r.cases;
        }
    }
    return r;
}

}  // namespace contrail
