#include "contrail/nn.hpp"

#include <cmath>

namespace contrail::nn {

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state) {
    if (params.size() != grads.size()) {
        throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->size() != grads[i].size()) {
            throw ShapeError("adam_step: gradient " + std::to_string(i) + " has the wrong size");
        }
    }
    if (state.m.empty() && state.v.empty() && state.t == 0) {
        for (const Tensor* p : params) {
            state.m.emplace_back(p->size(), 0.0);
            state.v.emplace_back(p->size(), 0.0);
        }
    }
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ShapeError("adam_step: optimizer state does not match the parameter list");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (state.m[i].size() != params[i]->size() || state.v[i].size() != params[i]->size()) {
            throw ShapeError("adam_step: moment buffer " + std::to_string(i) + " has the wrong size");
        }
    }

    ++state.t;
    const double b1 = state.beta1;
    const double b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i]->values();
        auto g = grads[i].values();
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = g[j];
            m[j] = b1 * m[j] + (1.0 - b1) * gj;
            v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
            const double m_hat = m[j] / c1;
            const double v_hat = v[j] / c2;
            p[j] = static_cast<float>(p[j] - state.lr * m_hat / (std::sqrt(v_hat) + state.eps));
        }
    }
}

void adam_step(UNet& net, std::span<const Tensor> grads, AdamState& state) {
    auto& params = net.mutable_parameters();
    std::vector<Tensor*> ptrs;
    ptrs.reserve(params.size());
    for (auto& p : params) {
        ptrs.push_back(&p.value);
    }
    adam_step(ptrs, grads, state);
}

}  // namespace contrail::nn
