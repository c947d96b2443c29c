#include "contrail/composite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "contrail/png_io.hpp"
#include "le_bytes.hpp"

namespace contrail {
namespace {

using detail::ByteReader;
using detail::put_f32;
using detail::put_le;

constexpr char kMagic[4] = {'B', 'S', 'T', 'K'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kFlagNight = 0x1;
constexpr std::uint8_t kFlagCirrus = 0x2;

void validate(const BandStack& b) {
    if (b.height <= 0 || b.width <= 0) {
        throw ShapeError("band stack: dimensions must be positive");
    }
    const std::size_t n = static_cast<std::size_t>(b.height) * static_cast<std::size_t>(b.width);
    if (b.bt11.size() != n || b.bt12.size() != n || (b.cirrus && b.cirrus->size() != n)) {
        throw ShapeError("band stack: band sizes do not match height x width");
    }
    if (!b.is_night && !b.cirrus) {
        throw Error("band stack: daytime scene requires the cirrus band");
    }
}

void require_ranges(const ChannelRanges& r) {
    if (!(r.red_lo < r.red_hi) || !(r.green_lo < r.green_hi) || !(r.blue_lo < r.blue_hi)) {
        throw Error("channel ranges: lo must be below hi for every channel");
    }
}

std::vector<float> read_plane(ByteReader& in, std::size_t n) {
    std::vector<float> v(n);
    for (auto& x : v) {
        const std::size_t at = in.offset();
        x = in.get_f32();
        if (!std::isfinite(x)) {
            throw ParseError("band stack: non-finite sample", at);
        }
    }
    return v;
}

float stretch(double v, double lo, double hi) {
    return static_cast<float>(std::clamp((v - lo) / (hi - lo), 0.0, 1.0));
}

}  // namespace

ImagePlane false_color(const BandStack& bands, const ChannelRanges& ranges) {
    validate(bands);
    require_ranges(ranges);
    ImagePlane out(bands.height, bands.width, 3);
    const std::size_t n = bands.bt11.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double bt11 = bands.bt11[i];
        const double bt12 = bands.bt12[i];
        out.data[3 * i + 0] = stretch(bt12 - bt11, ranges.red_lo, ranges.red_hi);
        out.data[3 * i + 1] = bands.is_night ? 0.0F : stretch((*bands.cirrus)[i], ranges.green_lo, ranges.green_hi);
        out.data[3 * i + 2] = stretch(bt12, ranges.blue_lo, ranges.blue_hi);
    }
    return out;
}

std::string encode_bandstack(const BandStack& bands) {
    if (bands.height <= 0 || bands.width <= 0) {
        throw ShapeError("band stack: dimensions must be positive");
    }
    const std::size_t n = static_cast<std::size_t>(bands.height) * static_cast<std::size_t>(bands.width);
    if (bands.bt11.size() != n || bands.bt12.size() != n || (bands.cirrus && bands.cirrus->size() != n)) {
        throw ShapeError("band stack: band sizes do not match height x width");
    }
    std::string out(kMagic, sizeof(kMagic));
    put_le(out, kVersion);
    put_le(out, static_cast<std::uint32_t>(bands.height));
    put_le(out, static_cast<std::uint32_t>(bands.width));
    std::uint8_t flags = 0;
    if (bands.is_night) {
        flags |= kFlagNight;
    }
    if (bands.cirrus) {
        flags |= kFlagCirrus;
    }
    put_le(out, flags);
    for (float v : bands.bt11) {
        put_f32(out, v);
    }
    for (float v : bands.bt12) {
        put_f32(out, v);
    }
    if (bands.cirrus) {
        for (float v : *bands.cirrus) {
            put_f32(out, v);
        }
    }
    return out;
}

BandStack decode_bandstack(std::string_view bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw ParseError("band stack: bad magic (expected BSTK)", 0);
    }
    ByteReader in(bytes.substr(4), "band stack", 4);
    const auto version = in.get<std::uint16_t>();
    if (version != kVersion) {
        throw ParseError("band stack: unsupported version " + std::to_string(version), 4);
    }
    BandStack b;
    const auto h = in.get<std::uint32_t>();
    const auto w = in.get<std::uint32_t>();
    if (h == 0 || w == 0 || h > (1U << 16) || w > (1U << 16)) {
        throw ParseError("band stack: implausible dimensions", 6);
    }
    b.height = static_cast<int>(h);
    b.width = static_cast<int>(w);
    const auto flags = in.get<std::uint8_t>();
    b.is_night = (flags & kFlagNight) != 0;
    const std::size_t n = static_cast<std::size_t>(h) * w;
    if (flags & ~(kFlagNight | kFlagCirrus)) {
        throw ParseError("band stack: unknown flag bits", 14);
    }
    b.bt11 = read_plane(in, n);
    b.bt12 = read_plane(in, n);
    if (flags & kFlagCirrus) {
        b.cirrus = read_plane(in, n);
    }
    if (!in.done()) {
        throw ParseError("band stack: trailing bytes", in.offset());
    }
    return b;
}

BandStack read_bandstack(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open band stack: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return decode_bandstack(buffer.str());
}

void write_bandstack(const std::string& path, const BandStack& bands) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write band stack: " + path);
    }
    out << encode_bandstack(bands);
}

void write_rgb_png(const std::string& path, const ImagePlane& image) {
    if (image.channels != 3 && image.channels != 1) {
        throw ShapeError("write_rgb_png: expected 1 or 3 channels");
    }
    std::vector<std::uint8_t> pixels(image.data.size());
    std::transform(image.data.begin(), image.data.end(), pixels.begin(), [](float v) {
        return static_cast<std::uint8_t>(std::lround(std::clamp(static_cast<double>(v), 0.0, 1.0) * 255.0));
    });
    png::write(path, pixels, image.height, image.width, image.channels);
}

ImagePlane read_rgb_png(const std::string& path) {
    const auto png = png::read(path);
    ImagePlane img(png.height, png.width, 3);
    for (std::size_t p = 0; p < static_cast<std::size_t>(png.height) * static_cast<std::size_t>(png.width); ++p) {
        for (int ch = 0; ch < 3; ++ch) {
            const std::size_t src = png.channels == 1 ? p : 3 * p + static_cast<std::size_t>(ch);
            img.data[3 * p + static_cast<std::size_t>(ch)] = static_cast<float>(png.pixels[src] / 255.0);
        }
    }
    return img;
}

}  // namespace contrail
