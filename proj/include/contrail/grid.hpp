#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "contrail/error.hpp"

namespace contrail {

/// Binary H x W grid, row-major, contrail = 1.
struct Mask {
    int height{0};
    int width{0};
    std::vector<std::uint8_t> data;

    Mask() = default;
    Mask(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

    [[nodiscard]] std::size_t size() const noexcept { return data.size(); }
    [[nodiscard]] std::uint8_t at(int r, int c) const { return data[index(r, c)]; }
    std::uint8_t& at(int r, int c) { return data[index(r, c)]; }
    [[nodiscard]] std::size_t count() const noexcept {
        std::size_t n = 0;
        for (auto v : data) {
            n += v != 0 ? 1U : 0U;
        }
        return n;
    }
    [[nodiscard]] std::size_t index(int r, int c) const noexcept {
        return static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c);
    }

    friend bool operator==(const Mask&, const Mask&) = default;
};

/// Per-pixel predicted contrail probability, row-major, values in [0, 1].
struct ProbMap {
    int height{0};
    int width{0};
    std::vector<double> data;

    ProbMap() = default;
    ProbMap(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

    [[nodiscard]] std::size_t size() const noexcept { return data.size(); }

    friend bool operator==(const ProbMap&, const ProbMap&) = default;
};

/// Interleaved (HWC) float image with 1 or 3 channels.
struct ImagePlane {
    int height{0};
    int width{0};
    int channels{0};
    std::vector<float> data;

    ImagePlane() = default;
    ImagePlane(int h, int w, int ch, float fill = 0.0F)
        : height(h), width(w), channels(ch),
          data(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * static_cast<std::size_t>(ch), fill) {}

    [[nodiscard]] float at(int r, int c, int ch) const { return data[index(r, c, ch)]; }
    float& at(int r, int c, int ch) { return data[index(r, c, ch)]; }
    [[nodiscard]] std::size_t index(int r, int c, int ch) const noexcept {
        return (static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)) *
                   static_cast<std::size_t>(channels) +
               static_cast<std::size_t>(ch);
    }

    friend bool operator==(const ImagePlane&, const ImagePlane&) = default;
};

/// Image with its ground-truth mask, as fed to training and evaluation.
struct Sample {
    std::string scene_id;
    ImagePlane image;
    Mask mask;
};

[[nodiscard]] inline bool has_contrail(const Sample& s) noexcept { return s.mask.count() > 0; }

// Throws ShapeError when the two grids disagree in height/width.
template <class A, class B>
void require_same_shape(const A& a, const B& b, const char* context) {
    if (a.height != b.height || a.width != b.width) {
        throw ShapeError(std::string(context) + ": shape mismatch (" + std::to_string(a.height) + "x" +
                         std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                         std::to_string(b.width) + ")");
    }
}

}  // namespace contrail
