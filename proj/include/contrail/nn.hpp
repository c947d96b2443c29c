#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <new>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "contrail/error.hpp"

namespace contrail::nn {

struct Shape {
    int n{0};
    int c{0};
    int h{0};
    int w{0};

    [[nodiscard]] std::size_t count() const noexcept {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
               static_cast<std::size_t>(w);
    }
    [[nodiscard]] std::size_t plane() const noexcept {
        return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    }
    [[nodiscard]] std::string str() const;

    friend bool operator==(const Shape&, const Shape&) = default;
};

// 64-byte aligned storage. Vectorized reductions pick their summation order
// from the data address, so a fixed alignment keeps results a function of
// the values alone.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t alignment{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    [[nodiscard]] T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

    template <class U>
    friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
        return true;
    }
};

template <class T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Dense NCHW tensor. The network trains in float32; the double
/// instantiation exists for high-precision reference evaluation.
template <class T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;
    explicit BasicTensor(Shape shape, T fill = T(0)) : shape_(shape), data_(shape.count(), fill) {}

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] std::span<T> values() noexcept { return data_; }
    [[nodiscard]] std::span<const T> values() const noexcept { return data_; }
    [[nodiscard]] T* data() noexcept { return data_.data(); }
    [[nodiscard]] const T* data() const noexcept { return data_.data(); }

    // Start of the (n, c) spatial plane.
    [[nodiscard]] T* plane(int n, int c) noexcept { return data_.data() + plane_offset(n, c); }
    [[nodiscard]] const T* plane(int n, int c) const noexcept { return data_.data() + plane_offset(n, c); }

    T& at(int n, int c, int y, int x) noexcept { return data_[plane_offset(n, c) + offset(y, x)]; }
    [[nodiscard]] T at(int n, int c, int y, int x) const noexcept { return data_[plane_offset(n, c) + offset(y, x)]; }

    void fill(T v) noexcept { std::fill(data_.begin(), data_.end(), v); }

    template <class U>
    [[nodiscard]] BasicTensor<U> cast() const {
        BasicTensor<U> out(shape_);
        std::transform(data_.begin(), data_.end(), out.data(), [](T v) { return static_cast<U>(v); });
        return out;
    }

    friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

private:
    [[nodiscard]] std::size_t plane_offset(int n, int c) const noexcept {
        return (static_cast<std::size_t>(n) * static_cast<std::size_t>(shape_.c) + static_cast<std::size_t>(c)) *
               shape_.plane();
    }
    [[nodiscard]] std::size_t offset(int y, int x) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(shape_.w) + static_cast<std::size_t>(x);
    }

    Shape shape_{};
    AlignedVector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

// ---- layer kernels -------------------------------------------------------
//
// Convolutions are stride-1 cross-correlations with "same" zero padding of
// k/2 on each side. Weight shape is (out, in, k, k) with k odd; bias shape is
// (1, out, 1, 1).

template <class T>
[[nodiscard]] BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                                            const BasicTensor<T>& bias);

template <class T>
struct ConvGrads {
    BasicTensor<T> input;  // empty when not requested
    BasicTensor<T> weight;
    BasicTensor<T> bias;
};

template <class T>
[[nodiscard]] ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                                           const BasicTensor<T>& grad_out, bool want_input_grad = true);

template <class T>
void relu_inplace(BasicTensor<T>& t) noexcept;
// Zeroes grad where the forward ReLU output was not positive.
template <class T>
void relu_backward_inplace(BasicTensor<T>& grad, const BasicTensor<T>& relu_out);

template <class T>
struct PoolResult {
    BasicTensor<T> output;
    std::vector<std::uint32_t> argmax;  // flat input index per output element
};

// 2x2, stride 2. Ties pick the first element in row-major window order.
template <class T>
[[nodiscard]] PoolResult<T> maxpool2x2_forward(const BasicTensor<T>& input);
template <class T>
[[nodiscard]] BasicTensor<T> maxpool2x2_backward(const BasicTensor<T>& grad_out,
                                                 std::span<const std::uint32_t> argmax, const Shape& input_shape);

template <class T>
[[nodiscard]] BasicTensor<T> upsample2x_forward(const BasicTensor<T>& input);
// Sums each 2x2 block of grad_out back onto its source pixel.
template <class T>
[[nodiscard]] BasicTensor<T> upsample2x_backward(const BasicTensor<T>& grad_out);

template <class T>
[[nodiscard]] BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);
// Inverse of concat_channels for gradients: first `channels_a` go to .first.
template <class T>
[[nodiscard]] std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>& t, int channels_a);

template <class T>
[[nodiscard]] BasicTensor<T> sigmoid(const BasicTensor<T>& logits);

// ---- network -------------------------------------------------------------

struct NetConfig {
    int in_channels{3};
    int base_width{8};
    int depth{3};
    std::uint64_t seed{0};

    void validate() const;
    // Throws ShapeError unless the input matches channels and divisibility.
    void check_input(const Shape& input) const;

    friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

template <class T>
struct BasicParameter {
    std::string name;
    BasicTensor<T> value;
    int fan_in{0};  // 0 for biases
};

/// Activations kept by forward() for backward().
template <class T>
struct BasicForwardPass {
    BasicTensor<T> probs;  // (batch, 1, H, W), values in (0, 1)

    Shape input_shape{};
    std::uint64_t net_id{0};
    std::uint64_t net_version{0};
    std::vector<BasicTensor<T>> conv_inputs;   // per conv layer, in execution order
    std::vector<BasicTensor<T>> conv_outputs;  // post-activation output per conv layer
    std::vector<PoolResult<T>> pools;          // argmax per encoder level
    std::vector<Shape> pool_inputs;
};

/// UNet-style encoder/decoder. Each of `depth` encoder levels runs two 3x3
/// conv+ReLU then a 2x2 max-pool; a bottleneck pair of convs sits at the
/// bottom; each decoder level upsamples 2x (nearest), concatenates the
/// matching encoder output and runs two 3x3 conv+ReLU; a 1x1 conv and a
/// sigmoid produce the probability map. Level l has base_width * 2^l channels.
template <class T>
class BasicUNet {
public:
    using Tensor = BasicTensor<T>;
    using Parameter = BasicParameter<T>;
    using ForwardPass = BasicForwardPass<T>;

    explicit BasicUNet(const NetConfig& config);
    BasicUNet(const BasicUNet& other);
    BasicUNet& operator=(const BasicUNet& other);
    BasicUNet(BasicUNet&&) noexcept = default;
    BasicUNet& operator=(BasicUNet&&) noexcept = default;

    // Same architecture and weights at another precision.
    template <class U>
    [[nodiscard]] BasicUNet<U> cast() const {
        BasicUNet<U> out(config_);
        auto& dst = out.mutable_parameters();
        for (std::size_t i = 0; i < params_.size(); ++i) {
            dst[i].value = params_[i].value.template cast<U>();
        }
        return out;
    }

    [[nodiscard]] const NetConfig& config() const noexcept { return config_; }
    [[nodiscard]] const std::vector<Parameter>& parameters() const noexcept { return params_; }
    // Mutable access invalidates outstanding ForwardPass caches.
    [[nodiscard]] std::vector<Parameter>& mutable_parameters() noexcept {
        ++version_;
        return params_;
    }
    [[nodiscard]] std::size_t parameter_count() const noexcept;

    [[nodiscard]] ForwardPass forward(const Tensor& input) const;
    // Probabilities only, without keeping activations.
    [[nodiscard]] Tensor predict(const Tensor& input) const;

    // grad_probs = dLoss/dprobs with the shape of pass.probs. Returns one
    // gradient tensor per parameter, aligned with parameters().
    [[nodiscard]] std::vector<Tensor> backward(const ForwardPass& pass, const Tensor& grad_probs) const;

    void set_zero() noexcept;

private:
    struct ConvLayer {
        std::size_t weight;  // index into params_
        std::size_t bias;
        bool relu;
    };

    ForwardPass run(const Tensor& input, bool keep) const;
    void add_conv(const std::string& name, int in_ch, int out_ch, int kernel, bool relu);

    NetConfig config_;
    std::vector<Parameter> params_;
    std::vector<ConvLayer> layers_;
    std::uint64_t id_;
    std::uint64_t version_{0};
};

using UNet = BasicUNet<float>;
using UNetD = BasicUNet<double>;
using Parameter = BasicParameter<float>;
using ForwardPass = BasicForwardPass<float>;

extern template class BasicUNet<float>;
extern template class BasicUNet<double>;

// He-normal weights (std = sqrt(2 / fan_in)) from the config seed, zero biases.
[[nodiscard]] UNet init_params(const NetConfig& config);

// ---- optimizer -----------------------------------------------------------

struct AdamState {
    double lr{1e-4};
    double beta1{0.9};
    double beta2{0.999};
    double eps{1e-8};
    std::uint64_t t{0};
    std::vector<std::vector<double>> m;  // lazily sized on the first step
    std::vector<std::vector<double>> v;

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

// One bias-corrected Adam update over parallel lists of parameters and grads.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state);
void adam_step(UNet& net, std::span<const Tensor> grads, AdamState& state);

// ---- checkpoint ----------------------------------------------------------

// "CNET", u16 version, config (u32 in_channels, u32 base_width, u32 depth,
// u64 seed), u32 parameter count, then per parameter: u32 name length, name,
// u32 rank, u32 dims[rank], f32 values. A trailing u8 flags whether an
// optimizer block follows (f64 lr, beta1, beta2, eps; u64 t; u32 count; per
// parameter u64 length then f64 m values and f64 v values). Little-endian.
struct Checkpoint {
    UNet net;
    std::optional<AdamState> optimizer;
};

[[nodiscard]] std::string encode_checkpoint(const UNet& net, const AdamState* optimizer = nullptr);
[[nodiscard]] Checkpoint decode_checkpoint(std::string_view bytes);
void save_checkpoint(const std::string& path, const UNet& net, const AdamState* optimizer = nullptr);
[[nodiscard]] Checkpoint load_checkpoint(const std::string& path);

}  // namespace contrail::nn
