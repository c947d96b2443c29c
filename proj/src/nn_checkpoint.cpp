#include "contrail/nn.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "le_bytes.hpp"

namespace contrail::nn {
namespace {

using detail::ByteReader;
using detail::put_f32;
using detail::put_f64;
using detail::put_le;

constexpr char kMagic[4] = {'C', 'N', 'E', 'T'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

std::string encode_checkpoint(const UNet& net, const AdamState* optimizer) {
    std::string out(kMagic, sizeof(kMagic));
    put_le(out, kVersion);
    const NetConfig& c = net.config();
    put_le(out, static_cast<std::uint32_t>(c.in_channels));
    put_le(out, static_cast<std::uint32_t>(c.base_width));
    put_le(out, static_cast<std::uint32_t>(c.depth));
    put_le(out, c.seed);

    const auto& params = net.parameters();
    put_le(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        put_le(out, static_cast<std::uint32_t>(p.name.size()));
        out += p.name;
        const Shape& s = p.value.shape();
        put_le(out, std::uint32_t{4});
        for (int d : {s.n, s.c, s.h, s.w}) {
            put_le(out, static_cast<std::uint32_t>(d));
        }
        for (float v : p.value.values()) {
            put_f32(out, v);
        }
    }

    put_le(out, static_cast<std::uint8_t>(optimizer != nullptr));
    if (optimizer != nullptr) {
        put_f64(out, optimizer->lr);
        put_f64(out, optimizer->beta1);
        put_f64(out, optimizer->beta2);
        put_f64(out, optimizer->eps);
        put_le(out, optimizer->t);
        put_le(out, static_cast<std::uint32_t>(optimizer->m.size()));
        for (std::size_t i = 0; i < optimizer->m.size(); ++i) {
            put_le(out, static_cast<std::uint64_t>(optimizer->m[i].size()));
            for (double v : optimizer->m[i]) {
                put_f64(out, v);
            }
            for (double v : optimizer->v[i]) {
                put_f64(out, v);
            }
        }
    }
    return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw ParseError("checkpoint: bad magic (expected CNET)", 0);
    }
    ByteReader in(bytes.substr(4), "checkpoint", 4);
    const auto version = in.get<std::uint16_t>();
    if (version != kVersion) {
        throw ParseError("checkpoint: unsupported version " + std::to_string(version), 4);
    }
    NetConfig config;
    config.in_channels = static_cast<int>(in.get<std::uint32_t>());
    config.base_width = static_cast<int>(in.get<std::uint32_t>());
    config.depth = static_cast<int>(in.get<std::uint32_t>());
    config.seed = in.get<std::uint64_t>();
    try {
        config.validate();
    } catch (const Error& e) {
        throw ParseError(std::string("checkpoint: ") + e.what(), 6);
    }

    Checkpoint ck{UNet(config), std::nullopt};
    auto& params = ck.net.mutable_parameters();
    const auto count = in.get<std::uint32_t>();
    if (count != params.size()) {
        throw ParseError("checkpoint: parameter count " + std::to_string(count) + " does not match architecture (" +
                             std::to_string(params.size()) + ")",
                         in.offset() - 4);
    }
    for (auto& p : params) {
        const std::size_t at = in.offset();
        const auto len = in.get<std::uint32_t>();
        const std::string name = in.get_bytes(len);
        if (name != p.name) {
            throw ParseError("checkpoint: expected parameter '" + p.name + "', found '" + name + "'", at);
        }
        const auto rank = in.get<std::uint32_t>();
        if (rank != 4) {
            throw ParseError("checkpoint: parameter '" + name + "' has rank " + std::to_string(rank), at);
        }
        Shape s;
        s.n = static_cast<int>(in.get<std::uint32_t>());
        s.c = static_cast<int>(in.get<std::uint32_t>());
        s.h = static_cast<int>(in.get<std::uint32_t>());
        s.w = static_cast<int>(in.get<std::uint32_t>());
        if (s != p.value.shape()) {
            throw ParseError("checkpoint: parameter '" + name + "' has shape " + s.str() + ", expected " +
                                 p.value.shape().str(),
                             at);
        }
        for (float& v : p.value.values()) {
            v = in.get_f32();
        }
    }

    const auto has_opt = in.get<std::uint8_t>();
    if (has_opt > 1) {
        throw ParseError("checkpoint: bad optimizer flag", in.offset() - 1);
    }
    if (has_opt == 1) {
        AdamState st;
        st.lr = in.get_f64();
        st.beta1 = in.get_f64();
        st.beta2 = in.get_f64();
        st.eps = in.get_f64();
        st.t = in.get<std::uint64_t>();
        const auto n = in.get<std::uint32_t>();
        if (n != 0 && n != params.size()) {
            throw ParseError("checkpoint: optimizer state does not match parameter count", in.offset() - 4);
        }
        for (std::uint32_t i = 0; i < n; ++i) {
            const auto len = in.get<std::uint64_t>();
            if (len != params[i].value.size()) {
                throw ParseError("checkpoint: optimizer moment size mismatch", in.offset() - 8);
            }
            std::vector<double> m(len);
            std::vector<double> v(len);
            for (double& x : m) {
                x = in.get_f64();
            }
            for (double& x : v) {
                x = in.get_f64();
            }
            st.m.push_back(std::move(m));
            st.v.push_back(std::move(v));
        }
        ck.optimizer = std::move(st);
    }
    if (!in.done()) {
        throw ParseError("checkpoint: trailing bytes", in.offset());
    }
    return ck;
}

void save_checkpoint(const std::string& path, const UNet& net, const AdamState* optimizer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write checkpoint: " + path);
    }
    out << encode_checkpoint(net, optimizer);
    if (!out) {
        throw Error("failed writing checkpoint: " + path);
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open checkpoint: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return decode_checkpoint(buffer.str());
}

}  // namespace contrail::nn
