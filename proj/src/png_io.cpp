#include "contrail/png_io.hpp"

#include <csetjmp>
#include <cstdio>
#include <memory>

#include <png.h>

#include "contrail/error.hpp"

namespace contrail::png {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write(const std::string& path, const std::vector<std::uint8_t>& pixels, int height, int width, int channels) {
    if (channels != 1 && channels != 3) {
        throw Error("png::write: channels must be 1 or 3");
    }
    if (pixels.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                             static_cast<std::size_t>(channels)) {
        throw ShapeError("png::write: pixel buffer size does not match dimensions");
    }
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) {
        throw Error("cannot open for writing: " + path);
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("libpng: allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng: failed writing " + path);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
    for (int r = 0; r < height; ++r) {
        png_write_row(png, const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(r) * stride));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image8 read(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) {
        throw Error("cannot open for reading: " + path);
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error("libpng: allocation failed");
    }
    Image8 out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("libpng: failed reading " + path);
    }
    png_init_io(png, file.get());
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) {
        png_set_strip_16(png);
    }
    if (color == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
    }
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (color & PNG_COLOR_MASK_ALPHA) {
        png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = static_cast<int>(png_get_channels(png, info));
    const std::size_t stride = png_get_rowbytes(png, info);
    out.pixels.resize(stride * static_cast<std::size_t>(out.height));
    for (int r = 0; r < out.height; ++r) {
        png_read_row(png, out.pixels.data() + static_cast<std::size_t>(r) * stride, nullptr);
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

}  // namespace contrail::png
