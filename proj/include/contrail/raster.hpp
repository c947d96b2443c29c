#pragma once

#include <string>

#include "contrail/annotations.hpp"
#include "contrail/grid.hpp"

namespace contrail {

// Fill convention shared by the rasterizer and its tests: pixel (r, c) is set
// iff its center (r + 0.5, c + 0.5) lies inside the polygon under the even-odd
// rule. A horizontal ray is cast toward +col; an edge crosses the center row
// when exactly one endpoint has row > center row (half-open in row), and the
// crossing counts when its column is strictly greater than the center column.
// Centers on a min-side edge are inside, on a max-side edge outside.
[[nodiscard]] Mask rasterize_polygon(const Polygon& poly, int height, int width);

// Union of every polygon of the record. Zero polygons give an all-zero mask.
[[nodiscard]] Mask render_ground_truth(const SceneRecord& record, int height, int width);

// Nearest-neighbor resample: src = floor((dst + 0.5) * in / out).
[[nodiscard]] Mask resize_mask(const Mask& mask, int out_h, int out_w);

// Bilinear resample with half-pixel centers and edge clamping.
[[nodiscard]] ImagePlane resize_image(const ImagePlane& img, int out_h, int out_w);

// 8-bit grayscale PNG, 0 -> 0 and 1 -> 255.
void write_mask_png(const std::string& path, const Mask& mask);
[[nodiscard]] Mask read_mask_png(const std::string& path);

}  // namespace contrail
