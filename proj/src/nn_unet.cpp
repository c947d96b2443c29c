#include "contrail/nn.hpp"

#include <atomic>
#include <cmath>

#include "contrail/rng.hpp"

namespace contrail::nn {
namespace {

std::uint64_t next_net_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

int level_width(const NetConfig& c, int level) { return c.base_width << level; }

}  // namespace

void NetConfig::validate() const {
    if (in_channels < 1) throw Error("net config: in_channels must be >= 1");
    if (base_width < 1) throw Error("net config: base_width must be >= 1");
    if (depth < 1 || depth > 8) throw Error("net config: depth must lie in [1, 8]");
}

void NetConfig::check_input(const Shape& input) const {
    if (input.n < 1 || input.h < 1 || input.w < 1) {
        throw ShapeError("network input " + input.str() + " is empty");
    }
    if (input.c != in_channels) {
        throw ShapeError("network expects " + std::to_string(in_channels) + " input channels, got " +
                         std::to_string(input.c));
    }
    const int div = 1 << depth;
    if (input.h % div != 0 || input.w % div != 0) {
        throw ShapeError("network input " + input.str() + ": height and width must be divisible by " +
                         std::to_string(div));
    }
}

template <class T>
BasicUNet<T>::BasicUNet(const NetConfig& config) : config_(config), id_(next_net_id()) {
    config_.validate();
    const int d = config_.depth;
    int in_ch = config_.in_channels;
    for (int l = 0; l < d; ++l) {
        const int w = level_width(config_, l);
        add_conv("enc" + std::to_string(l) + ".conv1", in_ch, w, 3, true);
        add_conv("enc" + std::to_string(l) + ".conv2", w, w, 3, true);
        in_ch = w;
    }
    const int bw = level_width(config_, d);
    add_conv("bottleneck.conv1", in_ch, bw, 3, true);
    add_conv("bottleneck.conv2", bw, bw, 3, true);
    int below = bw;
    for (int l = d - 1; l >= 0; --l) {
        const int w = level_width(config_, l);
        add_conv("dec" + std::to_string(l) + ".conv1", below + w, w, 3, true);
        add_conv("dec" + std::to_string(l) + ".conv2", w, w, 3, true);
        below = w;
    }
    add_conv("head", below, 1, 1, false);
}

template <class T>
BasicUNet<T>::BasicUNet(const BasicUNet& other)
    : config_(other.config_), params_(other.params_), layers_(other.layers_), id_(next_net_id()) {}

template <class T>
BasicUNet<T>& BasicUNet<T>::operator=(const BasicUNet& other) {
    if (this != &other) {
        config_ = other.config_;
        params_ = other.params_;
        layers_ = other.layers_;
        id_ = next_net_id();
        version_ = 0;
    }
    return *this;
}

template <class T>
void BasicUNet<T>::add_conv(const std::string& name, int in_ch, int out_ch, int kernel, bool relu) {
    const int fan_in = in_ch * kernel * kernel;
    layers_.push_back({params_.size(), params_.size() + 1, relu});
    params_.push_back({name + ".weight", Tensor(Shape{out_ch, in_ch, kernel, kernel}), fan_in});
    params_.push_back({name + ".bias", Tensor(Shape{1, out_ch, 1, 1}), 0});
}

template <class T>
std::size_t BasicUNet<T>::parameter_count() const noexcept {
    std::size_t total = 0;
    for (const auto& p : params_) {
        total += p.value.size();
    }
    return total;
}

template <class T>
void BasicUNet<T>::set_zero() noexcept {
    for (auto& p : params_) {
        p.value.fill(T(0));
    }
    ++version_;
}

template <class T>
auto BasicUNet<T>::run(const Tensor& input, bool keep) const -> ForwardPass {
    config_.check_input(input.shape());
    ForwardPass pass;
    pass.input_shape = input.shape();
    pass.net_id = id_;
    pass.net_version = version_;

    std::size_t layer = 0;
    auto conv = [&](Tensor x) {
        const ConvLayer& L = layers_[layer++];
        Tensor y = conv2d_forward(x, params_[L.weight].value, params_[L.bias].value);
        if (L.relu) {
            relu_inplace(y);
        }
        if (keep) {
            pass.conv_inputs.push_back(std::move(x));
            pass.conv_outputs.push_back(y);
        }
        return y;
    };

    const int d = config_.depth;
    std::vector<Tensor> skips;
    skips.reserve(static_cast<std::size_t>(d));
    Tensor x = input;
    for (int l = 0; l < d; ++l) {
        x = conv(std::move(x));
        x = conv(std::move(x));
        skips.push_back(x);
        PoolResult<T> pool = maxpool2x2_forward(x);
        x = std::move(pool.output);
        if (keep) {
            pass.pool_inputs.push_back(skips.back().shape());
            pool.output = Tensor{};
            pass.pools.push_back(std::move(pool));
        }
    }
    x = conv(std::move(x));
    x = conv(std::move(x));
    for (int l = d - 1; l >= 0; --l) {
        x = concat_channels(upsample2x_forward(x), skips[static_cast<std::size_t>(l)]);
        x = conv(std::move(x));
        x = conv(std::move(x));
    }
    pass.probs = sigmoid(conv(std::move(x)));
    return pass;
}

template <class T>
auto BasicUNet<T>::forward(const Tensor& input) const -> ForwardPass { return run(input, true); }

template <class T>
auto BasicUNet<T>::predict(const Tensor& input) const -> Tensor { return run(input, false).probs; }

template <class T>
auto BasicUNet<T>::backward(const ForwardPass& pass, const Tensor& grad_probs) const -> std::vector<Tensor> {
    if (pass.net_id != id_ || pass.net_version != version_) {
        throw Error("network backward: activation cache is stale or belongs to another network");
    }
    if (pass.conv_inputs.size() != layers_.size() || pass.pools.size() != static_cast<std::size_t>(config_.depth)) {
        throw Error("network backward: activation cache is incomplete (was it produced by predict?)");
    }
    if (grad_probs.shape() != pass.probs.shape()) {
        throw ShapeError("network backward: grad shape " + grad_probs.shape().str() + " does not match output " +
                         pass.probs.shape().str());
    }

    std::vector<Tensor> grads(params_.size());
    std::size_t layer = layers_.size();
    auto conv_back = [&](Tensor g, bool want_input) {
        const std::size_t i = --layer;
        const ConvLayer& L = layers_[i];
        if (L.relu) {
            relu_backward_inplace(g, pass.conv_outputs[i]);
        }
        ConvGrads<T> cg = conv2d_backward(pass.conv_inputs[i], params_[L.weight].value, g, want_input);
        grads[L.weight] = std::move(cg.weight);
        grads[L.bias] = std::move(cg.bias);
        return std::move(cg.input);
    };

    // Sigmoid: dp/dz = p (1 - p).
    Tensor g(grad_probs.shape());
    {
        auto p = pass.probs.values();
        auto gp = grad_probs.values();
        auto gz = g.values();
        for (std::size_t i = 0; i < gz.size(); ++i) {
            gz[i] = gp[i] * p[i] * (T(1) - p[i]);
        }
    }
    g = conv_back(std::move(g), true);

    const int d = config_.depth;
    std::vector<Tensor> skip_grads(static_cast<std::size_t>(d));
    for (int l = 0; l < d; ++l) {
        g = conv_back(std::move(g), true);
        g = conv_back(std::move(g), true);
        const int up_channels = g.shape().c - level_width(config_, l);
        auto [g_up, g_skip] = split_channels(g, up_channels);
        skip_grads[static_cast<std::size_t>(l)] = std::move(g_skip);
        g = upsample2x_backward(g_up);
    }
    g = conv_back(std::move(g), true);
    g = conv_back(std::move(g), true);
    for (int l = d - 1; l >= 0; --l) {
        const auto li = static_cast<std::size_t>(l);
        Tensor gs = maxpool2x2_backward(g, pass.pools[li].argmax, pass.pool_inputs[li]);
        auto acc = gs.values();
        auto extra = skip_grads[li].values();
        for (std::size_t i = 0; i < acc.size(); ++i) {
            acc[i] += extra[i];
        }
        g = conv_back(std::move(gs), true);
        g = conv_back(std::move(g), l > 0);
    }
    return grads;
}

template class BasicUNet<float>;
template class BasicUNet<double>;

UNet init_params(const NetConfig& config) {
    UNet net(config);
    Rng rng(config.seed, 0x6e6e696e6974ULL);
    for (auto& p : net.mutable_parameters()) {
        if (p.fan_in == 0) {
            continue;
        }
        const double std_dev = std::sqrt(2.0 / p.fan_in);
        for (float& v : p.value.values()) {
            v = static_cast<float>(rng.normal() * std_dev);
        }
    }
    return net;
}

}  // namespace contrail::nn
