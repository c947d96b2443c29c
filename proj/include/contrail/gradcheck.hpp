#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "contrail/losses.hpp"
#include "contrail/nn.hpp"

namespace contrail {

// |a - b| / max(|a|, |b|, floor)
[[nodiscard]] double relative_error(double a, double b, double floor = 1e-8);

struct GradCheckResult {
    std::string name;
    std::size_t cases{0};     // random inputs or perturbed parameters checked
    std::size_t skipped{0};   // entries whose stencil crossed a non-differentiable point
    double max_rel_error{0.0};
    double tolerance{0.0};
    std::size_t over_tolerance{0};  // entries at or above tolerance
    std::string worst;              // description of the worst entry
    [[nodiscard]] bool passed() const noexcept { return cases > 0 && max_rel_error < tolerance; }
};

struct LossGradCheckOptions {
    int trials{20};
    int height{8};
    int width{8};
    double h{1e-4};
    double tolerance{1e-4};
    std::uint64_t seed{2023};
};

// Analytic loss gradients against central differences on random (p, g)
// pairs with p drawn from [0.01, 0.99]; one result per loss variant.
[[nodiscard]] std::vector<GradCheckResult> check_loss_gradients(const LossGradCheckOptions& options = {});

struct NetGradCheckOptions {
    nn::NetConfig net{3, 4, 2, 11};
    int size{16};
    double h{1e-3};
    double tolerance{1e-3};
    LossParams loss{};
    std::uint64_t data_seed{99};
};

// Parameter gradients of combined_loss(forward(x)) through backward()
// of the float32 network against central differences evaluated in 64-bit
// on the same weights.
[[nodiscard]] GradCheckResult check_network_gradients(const NetGradCheckOptions& options = {});

}  // namespace contrail
