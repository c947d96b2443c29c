#pragma once

#include <optional>
#include <string>
#include <vector>

#include "contrail/grid.hpp"

namespace contrail {

/// Per-scene band data. Brightness temperatures in kelvin, cirrus as
/// unitless top-of-atmosphere reflectance.
struct BandStack {
    int height{0};
    int width{0};
    std::vector<float> bt11;
    std::vector<float> bt12;
    std::optional<std::vector<float>> cirrus;
    bool is_night{false};

    friend bool operator==(const BandStack&, const BandStack&) = default;
};

/// Linear stretch bounds for the three composite channels.
struct ChannelRanges {
    double red_lo{-4.0};  // bt12 - bt11, K
    double red_hi{2.0};
    double green_lo{0.0};  // cirrus reflectance
    double green_hi{0.25};
    double blue_lo{243.0};  // bt12, K
    double blue_hi{303.0};
};

// red = stretch(bt12 - bt11), green = stretch(cirrus) or 0 at night,
// blue = stretch(bt12); each clamped to [0, 1].
[[nodiscard]] ImagePlane false_color(const BandStack& bands, const ChannelRanges& ranges = {});

// "BSTK" container: magic, u16 version, u32 height, u32 width, u8 flags
// (bit0 night, bit1 cirrus present), then bt11, bt12, [cirrus] as
// little-endian f32 row-major planes.
[[nodiscard]] std::string encode_bandstack(const BandStack& bands);
[[nodiscard]] BandStack decode_bandstack(std::string_view bytes);
[[nodiscard]] BandStack read_bandstack(const std::string& path);
void write_bandstack(const std::string& path, const BandStack& bands);

// 8-bit RGB PNG, channel value -> round(v * 255).
void write_rgb_png(const std::string& path, const ImagePlane& image);
[[nodiscard]] ImagePlane read_rgb_png(const std::string& path);

}  // namespace contrail
