#pragma once

// Little-endian byte packing shared by the binary container formats.

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

#include "contrail/error.hpp"

namespace contrail::detail {

template <class T>
void put_le(std::string& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFFU));
    }
}

inline void put_f32(std::string& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

class ByteReader {
public:
    ByteReader(std::string_view bytes, const char* context, std::size_t base_offset = 0)
        : bytes_(bytes), context_(context), base_(base_offset) {}

    template <class T>
    T get() {
        if (pos_ + sizeof(T) > bytes_.size()) {
            throw ParseError(std::string(context_) + ": truncated input", base_ + pos_);
        }
        std::uint64_t value = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            value |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(T);
        return static_cast<T>(value);
    }

    float get_f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
    double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

    std::string get_bytes(std::size_t n) {
        if (pos_ + n > bytes_.size()) {
            throw ParseError(std::string(context_) + ": truncated input", base_ + pos_);
        }
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }

    [[nodiscard]] std::size_t offset() const noexcept { return base_ + pos_; }
    [[nodiscard]] bool done() const noexcept { return pos_ == bytes_.size(); }

private:
    std::string_view bytes_;
    const char* context_;
    std::size_t base_;
    std::size_t pos_{0};
};

}  // namespace contrail::detail
