#include "contrail/raster.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "contrail/png_io.hpp"

namespace contrail {
namespace {

void require_dims(int h, int w, const char* context) {
    if (h <= 0 || w <= 0) {
        throw ShapeError(std::string(context) + ": dimensions must be positive");
    }
}

// Column where edge (a, b) crosses row y. Callers guarantee a.row != b.row.
double crossing_col(const PixelPoint& a, const PixelPoint& b, double y) {
    return a.col + (y - a.row) * (b.col - a.col) / (b.row - a.row);
}

}  // namespace

Mask rasterize_polygon(const Polygon& poly, int height, int width) {
    require_dims(height, width, "rasterize_polygon");
    if (poly.vertices.size() < 3) {
        throw ValidationError("rasterize_polygon: polygon needs at least 3 vertices", 0, "vertices");
    }
    Mask mask(height, width);
    const auto& v = poly.vertices;
    const std::size_t n = v.size();

    double min_row = v[0].row;
    double max_row = v[0].row;
    for (const auto& p : v) {
        min_row = std::min(min_row, p.row);
        max_row = std::max(max_row, p.row);
    }
    const int r_begin = static_cast<int>(std::clamp(std::floor(min_row - 0.5), 0.0, static_cast<double>(height)));
    const int r_end = static_cast<int>(std::clamp(std::ceil(max_row) + 1.0, 0.0, static_cast<double>(height)));

    std::vector<double> xs;
    xs.reserve(n);
    for (int r = r_begin; r < r_end; ++r) {
        const double y = r + 0.5;
        xs.clear();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            if ((v[i].row > y) != (v[j].row > y)) {
                xs.push_back(crossing_col(v[i], v[j], y));
            }
        }
        std::sort(xs.begin(), xs.end());
        // Center x is inside iff an odd number of crossings is > x, i.e.
        // xs[2k] <= x < xs[2k+1] for some k.
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            const double lo = xs[k];
            const double hi = xs[k + 1];
            if (!(lo < hi)) {
                continue;
            }
            const double first = std::clamp(std::ceil(lo - 0.5), 0.0, static_cast<double>(width));
            int c = static_cast<int>(first);
            while (c > 0 && (c - 1) + 0.5 >= lo) {
                --c;
            }
            while (c < width && c + 0.5 < lo) {
                ++c;
            }
            for (; c < width && c + 0.5 < hi; ++c) {
                mask.at(r, c) = 1;
            }
        }
    }
    return mask;
}

Mask render_ground_truth(const SceneRecord& record, int height, int width) {
    require_dims(height, width, "render_ground_truth");
    Mask out(height, width);
    for (const auto& poly : record.polygons) {
        const Mask m = rasterize_polygon(poly, height, width);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out.data[i] |= m.data[i];
        }
    }
    return out;
}

Mask resize_mask(const Mask& mask, int out_h, int out_w) {
    require_dims(out_h, out_w, "resize_mask");
    require_dims(mask.height, mask.width, "resize_mask");
    if (out_h == mask.height && out_w == mask.width) {
        return mask;
    }
    const auto src_index = [](int dst, int in, int out) {
        const auto s = static_cast<long long>(std::floor((dst + 0.5) * in / out));
        return static_cast<int>(std::clamp<long long>(s, 0, in - 1));
    };
    Mask out(out_h, out_w);
    for (int r = 0; r < out_h; ++r) {
        const int sr = src_index(r, mask.height, out_h);
        for (int c = 0; c < out_w; ++c) {
            out.at(r, c) = mask.at(sr, src_index(c, mask.width, out_w));
        }
    }
    return out;
}

ImagePlane resize_image(const ImagePlane& img, int out_h, int out_w) {
    require_dims(out_h, out_w, "resize_image");
    require_dims(img.height, img.width, "resize_image");
    if (out_h == img.height && out_w == img.width) {
        return img;
    }
    struct Tap {
        int i0;
        int i1;
        double w;
    };
    const auto taps = [](int in, int out) {
        std::vector<Tap> t(static_cast<std::size_t>(out));
        const double scale = static_cast<double>(in) / out;
        for (int d = 0; d < out; ++d) {
            const double s = std::clamp((d + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
            const int i0 = static_cast<int>(std::floor(s));
            const int i1 = std::min(i0 + 1, in - 1);
            t[static_cast<std::size_t>(d)] = {i0, i1, s - i0};
        }
        return t;
    };
    const auto rows = taps(img.height, out_h);
    const auto cols = taps(img.width, out_w);

    ImagePlane out(out_h, out_w, img.channels);
    for (int r = 0; r < out_h; ++r) {
        const Tap& tr = rows[static_cast<std::size_t>(r)];
        for (int c = 0; c < out_w; ++c) {
            const Tap& tc = cols[static_cast<std::size_t>(c)];
            for (int ch = 0; ch < img.channels; ++ch) {
                const double top = img.at(tr.i0, tc.i0, ch) * (1.0 - tc.w) + img.at(tr.i0, tc.i1, ch) * tc.w;
                const double bottom = img.at(tr.i1, tc.i0, ch) * (1.0 - tc.w) + img.at(tr.i1, tc.i1, ch) * tc.w;
                out.at(r, c, ch) = static_cast<float>(top * (1.0 - tr.w) + bottom * tr.w);
            }
        }
    }
    return out;
}

void write_mask_png(const std::string& path, const Mask& mask) {
    std::vector<std::uint8_t> pixels(mask.size());
    std::transform(mask.data.begin(), mask.data.end(), pixels.begin(),
                   [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
    png::write(path, pixels, mask.height, mask.width, 1);
}

Mask read_mask_png(const std::string& path) {
    const auto png = png::read(path);
    if (png.channels != 1) {
        throw Error("mask PNG must be single-channel: " + path);
    }
    Mask mask(png.height, png.width);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask.data[i] = png.pixels[i] >= 128 ? 1 : 0;
    }
    return mask;
}

}  // namespace contrail
