#include "contrail/nn.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace contrail::nn {
namespace {

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw ShapeError(what);
    }
}

// Valid output range for a tap offset d on an axis of length len: positions
// o with 0 <= o + d < len.
struct Range {
    int begin;
    int end;
};

Range tap_range(int d, int len) { return {std::max(0, -d), std::min(len, len - d)}; }

template <class T>
void check_conv(const BasicTensor<T>& input, const BasicTensor<T>& weight) {
    const Shape& x = input.shape();
    const Shape& w = weight.shape();
    require(w.h == w.w && w.h % 2 == 1, "conv2d: kernel must be square with odd size");
    require(x.c == w.c, "conv2d: input has " + std::to_string(x.c) + " channels, weight expects " +
                            std::to_string(w.c));
}


template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using Map = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMap = Eigen::Map<const RowMat<T>>;

// Patch matrix of one batch item: row (ic, ky, kx), column y * W + x holds
// input(ic, y + ky - pad, x + kx - pad), zero outside the frame. A 1x1
// kernel uses the input planes directly.
template <class T>
ConstMap<T> columns(const BasicTensor<T>& input, int n, int k, AlignedVector<T>& col) {
    const Shape& s = input.shape();
    const int H = s.h;
    const int W = s.w;
    const auto hw = static_cast<std::size_t>(H) * static_cast<std::size_t>(W);
    if (k == 1) {
        return ConstMap<T>(input.plane(n, 0), s.c, static_cast<Eigen::Index>(hw));
    }
    const int pad = k / 2;
    col.assign(static_cast<std::size_t>(s.c) * k * k * hw, T(0));
    T* row = col.data();
    for (int ic = 0; ic < s.c; ++ic) {
        const T* x = input.plane(n, ic);
        for (int ky = 0; ky < k; ++ky) {
            const Range ry = tap_range(ky - pad, H);
            for (int kx = 0; kx < k; ++kx, row += hw) {
                const int dx = kx - pad;
                const Range rx = tap_range(dx, W);
                for (int y = ry.begin; y < ry.end; ++y) {
                    const T* src = x + static_cast<std::ptrdiff_t>(y + ky - pad) * W + dx;
                    std::copy(src + rx.begin, src + rx.end, row + static_cast<std::ptrdiff_t>(y) * W + rx.begin);
                }
            }
        }
    }
    return ConstMap<T>(col.data(), static_cast<Eigen::Index>(s.c) * k * k, static_cast<Eigen::Index>(hw));
}

// Adjoint of columns(): scatter-add patch rows back onto the input planes.
template <class T>
void col2im(const T* col, int channels, int H, int W, int k, T* out) {
    const int pad = k / 2;
    const auto hw = static_cast<std::size_t>(H) * static_cast<std::size_t>(W);
    const T* row = col;
    for (int ic = 0; ic < channels; ++ic) {
        T* x = out + static_cast<std::size_t>(ic) * hw;
        for (int ky = 0; ky < k; ++ky) {
            const Range ry = tap_range(ky - pad, H);
            for (int kx = 0; kx < k; ++kx, row += hw) {
                const int dx = kx - pad;
                const Range rx = tap_range(dx, W);
                for (int y = ry.begin; y < ry.end; ++y) {
                    T* dst = x + static_cast<std::ptrdiff_t>(y + ky - pad) * W + dx;
                    const T* src = row + static_cast<std::ptrdiff_t>(y) * W;
                    for (int i = rx.begin; i < rx.end; ++i) {
                        dst[i] += src[i];
                    }
                }
            }
        }
    }
}

}  // namespace

std::string Shape::str() const {
    return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " +
           std::to_string(w) + ")";
}

template <class T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weight, const BasicTensor<T>& bias) {
    check_conv(input, weight);
    const Shape& xs = input.shape();
    const Shape& ws = weight.shape();
    require(bias.size() == static_cast<std::size_t>(ws.n), "conv2d: bias size must equal output channels");
    const int k = ws.h;
    const Eigen::Index hw = static_cast<Eigen::Index>(xs.h) * xs.w;
    const Eigen::Index taps = static_cast<Eigen::Index>(xs.c) * k * k;

    BasicTensor<T> out(Shape{xs.n, ws.n, xs.h, xs.w});
    const ConstMap<T> wm(weight.data(), ws.n, taps);
    const Eigen::Map<const Eigen::Vector<T, Eigen::Dynamic>> b(bias.data(), ws.n);
    AlignedVector<T> col;
    for (int n = 0; n < xs.n; ++n) {
        Map<T> o(out.plane(n, 0), ws.n, hw);
        o.noalias() = wm * columns(input, n, k, col);
        o.colwise() += b;
    }
    return out;
}

template <class T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weight, const BasicTensor<T>& grad_out,
                          bool want_input_grad) {
    check_conv(input, weight);
    const Shape& xs = input.shape();
    const Shape& ws = weight.shape();
    const Shape& gs = grad_out.shape();
    require(gs.n == xs.n && gs.c == ws.n && gs.h == xs.h && gs.w == xs.w,
            "conv2d_backward: grad_out shape " + gs.str() + " does not match forward output");
    const int k = ws.h;
    const Eigen::Index hw = static_cast<Eigen::Index>(xs.h) * xs.w;
    const Eigen::Index taps = static_cast<Eigen::Index>(xs.c) * k * k;

    ConvGrads<T> g;
    g.weight = BasicTensor<T>(ws);
    g.bias = BasicTensor<T>(Shape{1, ws.n, 1, 1});
    if (want_input_grad) {
        g.input = BasicTensor<T>(xs);
    }
    const ConstMap<T> wm(weight.data(), ws.n, taps);
    Map<T> gw(g.weight.data(), ws.n, taps);
    Eigen::Map<Eigen::Vector<T, Eigen::Dynamic>> gb(g.bias.data(), ws.n);
    AlignedVector<T> col;
    RowMat<T> gcol;
    for (int n = 0; n < xs.n; ++n) {
        const ConstMap<T> go(grad_out.plane(n, 0), ws.n, hw);
        gb += go.rowwise().sum();
        gw.noalias() += go * columns(input, n, k, col).transpose();
        if (want_input_grad) {
            if (k == 1) {
                Map<T>(g.input.plane(n, 0), xs.c, hw).noalias() = wm.transpose() * go;
            } else {
                gcol.noalias() = wm.transpose() * go;
                col2im(gcol.data(), xs.c, xs.h, xs.w, k, g.input.plane(n, 0));
            }
        }
    }
    return g;
}

template <class T>
void relu_inplace(BasicTensor<T>& t) noexcept {
    for (T& v : t.values()) {
        v = v > T(0) ? v : T(0);
    }
}

template <class T>
void relu_backward_inplace(BasicTensor<T>& grad, const BasicTensor<T>& relu_out) {
    require(grad.shape() == relu_out.shape(), "relu_backward: shape mismatch");
    auto g = grad.values();
    auto o = relu_out.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(o[i] > T(0))) {
            g[i] = T(0);
        }
    }
}

template <class T>
PoolResult<T> maxpool2x2_forward(const BasicTensor<T>& input) {
    const Shape& s = input.shape();
    require(s.h % 2 == 0 && s.w % 2 == 0, "maxpool2x2: spatial dims must be even, got " + s.str());
    PoolResult<T> r;
    r.output = BasicTensor<T>(Shape{s.n, s.c, s.h / 2, s.w / 2});
    r.argmax.resize(r.output.size());
    std::size_t o = 0;
    for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
            const T* x = input.plane(n, c);
            const std::size_t base = static_cast<std::size_t>(x - input.data());
            for (int y = 0; y < s.h; y += 2) {
                for (int xx = 0; xx < s.w; xx += 2, ++o) {
                    const std::size_t cand[4] = {
                        static_cast<std::size_t>(y) * s.w + xx, static_cast<std::size_t>(y) * s.w + xx + 1,
                        static_cast<std::size_t>(y + 1) * s.w + xx, static_cast<std::size_t>(y + 1) * s.w + xx + 1};
                    std::size_t best = cand[0];
                    for (int j = 1; j < 4; ++j) {
                        if (x[cand[j]] > x[best]) {
                            best = cand[j];
                        }
                    }
                    r.output.data()[o] = x[best];
                    r.argmax[o] = static_cast<std::uint32_t>(base + best);
                }
            }
        }
    }
    return r;
}

template <class T>
BasicTensor<T> maxpool2x2_backward(const BasicTensor<T>& grad_out, std::span<const std::uint32_t> argmax, const Shape& input_shape) {
    require(grad_out.size() == argmax.size(), "maxpool2x2_backward: argmax does not match grad_out");
    BasicTensor<T> g(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        g.data()[argmax[i]] += grad_out.data()[i];
    }
    return g;
}

template <class T>
BasicTensor<T> upsample2x_forward(const BasicTensor<T>& input) {
    const Shape& s = input.shape();
    BasicTensor<T> out(Shape{s.n, s.c, s.h * 2, s.w * 2});
    const int W2 = s.w * 2;
    for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
            const T* x = input.plane(n, c);
            T* o = out.plane(n, c);
            for (int y = 0; y < s.h * 2; ++y) {
                const T* xrow = x + static_cast<std::ptrdiff_t>(y / 2) * s.w;
                T* orow = o + static_cast<std::ptrdiff_t>(y) * W2;
                for (int xx = 0; xx < W2; ++xx) {
                    orow[xx] = xrow[xx / 2];
                }
            }
        }
    }
    return out;
}

template <class T>
BasicTensor<T> upsample2x_backward(const BasicTensor<T>& grad_out) {
    const Shape& s = grad_out.shape();
    require(s.h % 2 == 0 && s.w % 2 == 0, "upsample2x_backward: spatial dims must be even");
    BasicTensor<T> g(Shape{s.n, s.c, s.h / 2, s.w / 2});
    const int w = s.w / 2;
    for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
            const T* go = grad_out.plane(n, c);
            T* gi = g.plane(n, c);
            for (int y = 0; y < s.h / 2; ++y) {
                const T* r0 = go + static_cast<std::ptrdiff_t>(2 * y) * s.w;
                const T* r1 = r0 + s.w;
                for (int x = 0; x < w; ++x) {
                    gi[static_cast<std::ptrdiff_t>(y) * w + x] = r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1];
                }
            }
        }
    }
    return g;
}

template <class T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    require(sa.n == sb.n && sa.h == sb.h && sa.w == sb.w,
            "concat_channels: " + sa.str() + " and " + sb.str() + " are incompatible");
    BasicTensor<T> out(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
    const std::size_t plane = sa.plane();
    for (int n = 0; n < sa.n; ++n) {
        std::copy_n(a.plane(n, 0), plane * static_cast<std::size_t>(sa.c), out.plane(n, 0));
        std::copy_n(b.plane(n, 0), plane * static_cast<std::size_t>(sb.c), out.plane(n, sa.c));
    }
    return out;
}

template <class T>
std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>& t, int channels_a) {
    const Shape& s = t.shape();
    require(channels_a >= 0 && channels_a <= s.c, "split_channels: channel split out of range");
    BasicTensor<T> a(Shape{s.n, channels_a, s.h, s.w});
    BasicTensor<T> b(Shape{s.n, s.c - channels_a, s.h, s.w});
    const std::size_t plane = s.plane();
    for (int n = 0; n < s.n; ++n) {
        std::copy_n(t.plane(n, 0), plane * static_cast<std::size_t>(channels_a), a.plane(n, 0));
        std::copy_n(t.plane(n, channels_a), plane * static_cast<std::size_t>(s.c - channels_a), b.plane(n, 0));
    }
    return {std::move(a), std::move(b)};
}

template <class T>
BasicTensor<T> sigmoid(const BasicTensor<T>& logits) {
    BasicTensor<T> out(logits.shape());
    auto src = logits.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const T z = src[i];
        // Split by sign so exp never overflows.
        if (z >= T(0)) {
            dst[i] = T(1) / (T(1) + std::exp(-z));
        } else {
            const T e = std::exp(z);
            dst[i] = e / (T(1) + e);
        }
    }
    return out;
}

#define CONTRAIL_INSTANTIATE(T)                                                                          \
    template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&); \
    template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,   \
                                          bool);                                                               \
    template void relu_inplace(BasicTensor<T>&) noexcept;                                                      \
    template void relu_backward_inplace(BasicTensor<T>&, const BasicTensor<T>&);                               \
    template PoolResult<T> maxpool2x2_forward(const BasicTensor<T>&);                                          \
    template BasicTensor<T> maxpool2x2_backward(const BasicTensor<T>&, std::span<const std::uint32_t>,         \
                                                const Shape&);                                                 \
    template BasicTensor<T> upsample2x_forward(const BasicTensor<T>&);                                         \
    template BasicTensor<T> upsample2x_backward(const BasicTensor<T>&);                                        \
    template BasicTensor<T> concat_channels(const BasicTensor<T>&, const BasicTensor<T>&);                     \
    template std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>&, int);             \
    template BasicTensor<T> sigmoid(const BasicTensor<T>&);

CONTRAIL_INSTANTIATE(float)
CONTRAIL_INSTANTIATE(double)
#undef CONTRAIL_INSTANTIATE

}  // namespace contrail::nn
