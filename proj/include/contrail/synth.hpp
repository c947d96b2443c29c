#pragma once

#include <cstdint>
#include <vector>

#include "contrail/grid.hpp"

namespace contrail {

struct IntRange {
    int lo{0};
    int hi{0};
};

struct RealRange {
    double lo{0.0};
    double hi{0.0};
};

/// Knobs of the synthetic contrail scene generator.
struct SynthParams {
    int height{64};
    int width{64};
    IntRange n_contrails{1, 3};
    RealRange line_width{3.0, 5.0};  // pixels
    double blur_sigma{0.7};          // pixels, 0 disables
    IntRange n_clutter_blobs{0, 2};
    double noise_std{0.02};
    std::uint64_t seed{7};

    void validate() const;
};

// One scene, deterministic in (params.seed, index). Contrails are straight
// capsule-shaped strips drawn dark on a textured bright background; the mask
// marks pixels whose center lies within width/2 of the strip axis.
[[nodiscard]] Sample generate_scene(const SynthParams& params, std::uint64_t index);

// Scenes 0..count-1 with ids "synth-<index>".
[[nodiscard]] std::vector<Sample> generate_dataset(const SynthParams& params, std::size_t count);

}  // namespace contrail
