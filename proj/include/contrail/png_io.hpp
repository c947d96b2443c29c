#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace contrail::png {

struct Image8 {
    int height{0};
    int width{0};
    int channels{0};  // 1 = gray, 3 = RGB
    std::vector<std::uint8_t> pixels;
};

void write(const std::string& path, const std::vector<std::uint8_t>& pixels, int height, int width, int channels);

// Reads 8-bit gray or RGB; palette/alpha/16-bit inputs are converted.
[[nodiscard]] Image8 read(const std::string& path);

}  // namespace contrail::png
