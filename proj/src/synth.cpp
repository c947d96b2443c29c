#include "contrail/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "contrail/rng.hpp"

namespace contrail {
namespace {

struct Segment {
    double r0, c0, r1, c1;
};

double distance_to_segment(double r, double c, const Segment& s) {
    const double dr = s.r1 - s.r0;
    const double dc = s.c1 - s.c0;
    const double len2 = dr * dr + dc * dc;
    double t = len2 > 0.0 ? ((r - s.r0) * dr + (c - s.c0) * dc) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double pr = s.r0 + t * dr - r;
    const double pc = s.c0 + t * dc - c;
    return std::sqrt(pr * pr + pc * pc);
}

// Endpoints inside the frame, length at least 0.3 x the shorter side.
Segment sample_segment(Rng& rng, int h, int w) {
    const double min_len = 0.3 * std::min(h, w);
    Segment s{};
    for (int attempt = 0; attempt < 1000; ++attempt) {
        s = {rng.uniform(0.0, h), rng.uniform(0.0, w), rng.uniform(0.0, h), rng.uniform(0.0, w)};
        if (std::hypot(s.r1 - s.r0, s.c1 - s.c0) >= min_len) {
            return s;
        }
    }
    // Fall back to a corner-to-corner diagonal; practically unreachable.
    return {0.0, 0.0, static_cast<double>(h), static_cast<double>(w)};
}

void gaussian_blur(ImagePlane& img, double sigma) {
    if (sigma <= 0.0) {
        return;
    }
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double norm = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * i * i / (sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = v;
        norm += v;
    }
    for (double& v : kernel) {
        v /= norm;
    }
    const int h = img.height;
    const int w = img.width;
    ImagePlane tmp(h, w, img.channels);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (int ch = 0; ch < img.channels; ++ch) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    acc += kernel[static_cast<std::size_t>(k + radius)] * img.at(r, std::clamp(c + k, 0, w - 1), ch);
                }
                tmp.at(r, c, ch) = static_cast<float>(acc);
            }
        }
    }
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (int ch = 0; ch < img.channels; ++ch) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    acc += kernel[static_cast<std::size_t>(k + radius)] * tmp.at(std::clamp(r + k, 0, h - 1), c, ch);
                }
                img.at(r, c, ch) = static_cast<float>(acc);
            }
        }
    }
}

}  // namespace

void SynthParams::validate() const {
    if (height <= 0 || width <= 0) throw Error("synth params: dimensions must be positive");
    if (n_contrails.lo < 0 || n_contrails.lo > n_contrails.hi) throw Error("synth params: bad n_contrails range");
    if (n_clutter_blobs.lo < 0 || n_clutter_blobs.lo > n_clutter_blobs.hi) {
        throw Error("synth params: bad n_clutter_blobs range");
    }
    if (!(line_width.lo > 0.0) || line_width.lo > line_width.hi) throw Error("synth params: bad line_width range");
    if (!(blur_sigma >= 0.0)) throw Error("synth params: blur_sigma must be >= 0");
    if (!(noise_std >= 0.0)) throw Error("synth params: noise_std must be >= 0");
}

Sample generate_scene(const SynthParams& params, std::uint64_t index) {
    params.validate();
    Rng rng(params.seed, index);
    const int h = params.height;
    const int w = params.width;
    const double side = std::min(h, w);

    Sample out;
    out.scene_id = "synth-" + std::to_string(index);
    out.image = ImagePlane(h, w, 3);
    out.mask = Mask(h, w);

    // Background: per-channel level plus a few low-frequency waves.
    double base[3];
    for (double& b : base) {
        b = rng.uniform(0.55, 0.8);
    }
    struct Wave {
        double fr, fc, phase, amp;
    };
    Wave waves[3];
    for (Wave& wv : waves) {
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double freq = rng.uniform(0.5, 2.5) * 2.0 * std::numbers::pi / side;
        wv = {freq * std::sin(angle), freq * std::cos(angle), rng.uniform(0.0, 2.0 * std::numbers::pi),
              rng.uniform(0.01, 0.05)};
    }
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double tex = 0.0;
            for (const Wave& wv : waves) {
                tex += wv.amp * std::sin(wv.fr * r + wv.fc * c + wv.phase);
            }
            for (int ch = 0; ch < 3; ++ch) {
                out.image.at(r, c, ch) = static_cast<float>(base[ch] + tex);
            }
        }
    }

    // Cirrus-like soft elliptical blobs.
    const auto n_blobs = rng.integer(params.n_clutter_blobs.lo, params.n_clutter_blobs.hi);
    for (std::int64_t b = 0; b < n_blobs; ++b) {
        const double cr = rng.uniform(0.0, h);
        const double cc = rng.uniform(0.0, w);
        const double ra = rng.uniform(0.08, 0.25) * side;
        const double rb = rng.uniform(0.08, 0.25) * side;
        const double theta = rng.uniform(0.0, std::numbers::pi);
        const double amp = rng.uniform(0.08, 0.2);
        const double ct = std::cos(theta);
        const double st = std::sin(theta);
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                const double dr = r + 0.5 - cr;
                const double dc = c + 0.5 - cc;
                const double u = (dr * ct + dc * st) / ra;
                const double v = (-dr * st + dc * ct) / rb;
                const double k = amp * std::exp(-0.5 * (u * u + v * v));
                for (int ch = 0; ch < 3; ++ch) {
                    out.image.at(r, c, ch) += static_cast<float>(k);
                }
            }
        }
    }

    // Contrails: dark strips with a one-pixel soft edge in the image; the
    // mask uses the exact capsule test at pixel centers.
    const auto n_lines = rng.integer(params.n_contrails.lo, params.n_contrails.hi);
    for (std::int64_t l = 0; l < n_lines; ++l) {
        const Segment seg = sample_segment(rng, h, w);
        const double half = 0.5 * rng.uniform(params.line_width.lo, params.line_width.hi);
        const double darkness = rng.uniform(0.35, 0.55);
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                const double d = distance_to_segment(r + 0.5, c + 0.5, seg);
                if (d <= half) {
                    out.mask.at(r, c) = 1;
                }
                const double coverage = std::clamp(half + 0.5 - d, 0.0, 1.0);
                if (coverage > 0.0) {
                    for (int ch = 0; ch < 3; ++ch) {
                        float& px = out.image.at(r, c, ch);
                        px = static_cast<float>(px * (1.0 - darkness * coverage));
                    }
                }
            }
        }
    }

    gaussian_blur(out.image, params.blur_sigma);

    for (float& px : out.image.data) {
        const double noisy = px + (params.noise_std > 0.0 ? rng.normal() * params.noise_std : 0.0);
        px = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
    }
    return out;
}

std::vector<Sample> generate_dataset(const SynthParams& params, std::size_t count) {
    std::vector<Sample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(generate_scene(params, i));
    }
    return out;
}

}  // namespace contrail
