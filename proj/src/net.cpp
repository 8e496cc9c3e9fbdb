#include "tracknet/net.hpp"

#include "tracknet/kernels.hpp"
#include "tracknet/rng.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>

namespace tracknet {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv2D: return "Conv2D";
        case LayerKind::ReLU: return "ReLU";
        case LayerKind::MaxPool2D: return "MaxPool2D";
        case LayerKind::Flatten: return "Flatten";
        case LayerKind::Linear: return "Linear";
        case LayerKind::Tanh: return "Tanh";
    }
    return "?";
}

std::int64_t LayerSpec::param_count() const {
    if (kind == LayerKind::Conv2D || kind == LayerKind::Linear)
        return weight.size() + bias.size();
    return 0;
}

std::vector<int> LayerSpec::output_shape(const std::vector<int>& in) const {
    auto mismatch = [&](const std::string& want) {
        throw NetError(std::string(layer_kind_name(kind)) + " expects input " + want + ", got " +
                       shape_str(in));
    };
    switch (kind) {
        case LayerKind::Conv2D: {
            if (in != std::vector<int>{in_h, in_w}) mismatch(shape_str({in_h, in_w}));
            const int oh = (in_h + 2 * pad - kernel) / stride + 1;
            const int ow = (in_w + 2 * pad - kernel) / stride + 1;
            return {oh, ow};
        }
        case LayerKind::MaxPool2D: {
            if (in != std::vector<int>{in_h, in_w}) mismatch(shape_str({in_h, in_w}));
            const int oh = (in_h - kernel) / stride + 1;
            const int ow = (in_w - kernel) / stride + 1;
            return {oh, ow};
        }
        case LayerKind::Flatten: {
            if (in != std::vector<int>{in_h, in_w}) mismatch(shape_str({in_h, in_w}));
            return {in_h * in_w};
        }
        case LayerKind::Linear: {
            if (in != std::vector<int>{in_dim}) mismatch(shape_str({in_dim}));
            return {out_dim};
        }
        case LayerKind::ReLU:
        case LayerKind::Tanh:
            return in;
    }
    throw NetError("unknown layer kind");
}

LayerSpec LayerSpec::conv2d(int in_h, int in_w, int kernel, int stride, int pad) {
    LayerSpec l;
    l.kind = LayerKind::Conv2D;
    l.in_h = in_h;
    l.in_w = in_w;
    l.kernel = kernel;
    l.stride = stride;
    l.pad = pad;
    l.weight = Tensor::zeros({kernel, kernel});
    l.bias = Tensor::zeros({1});
    return l;
}

LayerSpec LayerSpec::relu() {
    LayerSpec l;
    l.kind = LayerKind::ReLU;
    return l;
}

LayerSpec LayerSpec::maxpool(int in_h, int in_w, int window, int stride) {
    LayerSpec l;
    l.kind = LayerKind::MaxPool2D;
    l.in_h = in_h;
    l.in_w = in_w;
    l.kernel = window;
    l.stride = stride;
    return l;
}

LayerSpec LayerSpec::flatten(int in_h, int in_w) {
    LayerSpec l;
    l.kind = LayerKind::Flatten;
    l.in_h = in_h;
    l.in_w = in_w;
    return l;
}

LayerSpec LayerSpec::linear(int in_dim, int out_dim) {
    LayerSpec l;
    l.kind = LayerKind::Linear;
    l.in_dim = in_dim;
    l.out_dim = out_dim;
    l.weight = Tensor::zeros({out_dim, in_dim});
    l.bias = Tensor::zeros({out_dim});
    return l;
}

LayerSpec LayerSpec::tanh_layer() {
    LayerSpec l;
    l.kind = LayerKind::Tanh;
    return l;
}

std::vector<std::int64_t> Network::per_layer_param_counts() const {
    std::vector<std::int64_t> counts;
    for (const auto& l : layers)
        if (l.param_count() > 0) counts.push_back(l.param_count());
    return counts;
}

std::int64_t Network::total_param_count() const {
    std::int64_t total = 0;
    for (const auto& l : layers) total += l.param_count();
    return total;
}

int Network::input_side() const {
    if (input_shape.size() != 2 || input_shape[0] != input_shape[1])
        throw NetError("network input is not a square image: " + shape_str(input_shape));
    return input_shape[0];
}

void Network::validate() const {
    if (layers.empty()) throw NetError("network has no layers");
    std::vector<int> cur = input_shape;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        try {
            cur = layers[i].output_shape(cur);
        } catch (const NetError& e) {
            throw NetError("layer " + std::to_string(i) + ": " + e.what());
        }
    }
    if (cur.size() != 1)
        throw NetError("network output must be rank-1, got " + shape_str(cur));
    if (cur[0] != output_dim)
        throw NetError("network output dim " + std::to_string(cur[0]) + " != declared " +
                       std::to_string(output_dim));
}

namespace {

void init_params(Network& net, std::uint64_t seed) {
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        LayerSpec& l = net.layers[i];
        if (l.param_count() == 0) continue;
        const int fan_in = l.kind == LayerKind::Conv2D ? l.kernel * l.kernel : l.in_dim;
        const float bound = std::sqrt(1.0f / static_cast<float>(fan_in));
        SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
        for (auto& w : l.weight.data) w = rng.uniformf(-bound, bound);
        l.bias.fill(0.0f);
    }
}

}  // namespace

Network make_track_network(int side, std::uint64_t seed) {
    if (side <= 0 || side % 4 != 0)
        throw NetError("input side must be a positive multiple of 4, got " + std::to_string(side));
    const int half = side / 2;
    const int quarter = side / 4;
    Network net;
    net.input_shape = {side, side};
    net.output_dim = 2;
    net.layers.push_back(LayerSpec::conv2d(side, side));
    net.layers.push_back(LayerSpec::relu());
    net.layers.push_back(LayerSpec::maxpool(side, side));
    net.layers.push_back(LayerSpec::conv2d(half, half));
    net.layers.push_back(LayerSpec::relu());
    net.layers.push_back(LayerSpec::maxpool(half, half));
    net.layers.push_back(LayerSpec::flatten(quarter, quarter));
    net.layers.push_back(LayerSpec::linear(quarter * quarter, 256));
    net.layers.push_back(LayerSpec::relu());
    net.layers.push_back(LayerSpec::linear(256, 128));
    net.layers.push_back(LayerSpec::relu());
    net.layers.push_back(LayerSpec::linear(128, 2));
    net.layers.push_back(LayerSpec::tanh_layer());
    net.validate();
    init_params(net, seed);
    return net;
}

Network init_network(std::uint64_t seed) { return make_track_network(112, seed); }

Network make_network(std::vector<LayerSpec> layers, std::vector<int> input_shape,
                     std::uint64_t seed) {
    Network net;
    net.layers = std::move(layers);
    net.input_shape = std::move(input_shape);
    std::vector<int> cur = net.input_shape;
    for (const auto& l : net.layers) cur = l.output_shape(cur);
    if (cur.size() != 1) throw NetError("network output must be rank-1, got " + shape_str(cur));
    net.output_dim = cur[0];
    net.validate();
    init_params(net, seed);
    return net;
}

Gradients Gradients::zeros_like(const Network& net) {
    Gradients g;
    g.weight.resize(net.layers.size());
    g.bias.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (net.layers[i].param_count() == 0) continue;
        g.weight[i] = Tensor::zeros(net.layers[i].weight.shape);
        g.bias[i] = Tensor::zeros(net.layers[i].bias.shape);
    }
    return g;
}

void Gradients::accumulate(const Gradients& other, float scale) {
    for (std::size_t i = 0; i < weight.size(); ++i) {
        for (std::int64_t j = 0; j < weight[i].size(); ++j) weight[i][j] += scale * other.weight[i][j];
        for (std::int64_t j = 0; j < bias[i].size(); ++j) bias[i][j] += scale * other.bias[i][j];
    }
    if (input.size() > 0 && other.input.size() > 0)
        for (std::int64_t j = 0; j < input.size(); ++j) input[j] += scale * other.input[j];
}

void Gradients::scale(float s) {
    for (auto& t : weight)
        for (auto& v : t.data) v *= s;
    for (auto& t : bias)
        for (auto& v : t.data) v *= s;
    for (auto& v : input.data) v *= s;
}

bool Gradients::congruent_with(const Network& net) const {
    if (weight.size() != net.layers.size() || bias.size() != net.layers.size()) return false;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (net.layers[i].param_count() == 0) continue;
        if (!weight[i].same_shape(net.layers[i].weight)) return false;
        if (!bias[i].same_shape(net.layers[i].bias)) return false;
    }
    return true;
}

namespace {

// forward pass keeping the input of every layer (and the final output);
// acts[i] is the input to layer i, acts[L] the network output
std::vector<Tensor> forward_trace(const Network& net, const Tensor& input) {
    if (input.shape != net.input_shape)
        throw NetError("input shape " + shape_str(input.shape) + " does not match network input " +
                       shape_str(net.input_shape));
    std::vector<Tensor> acts;
    acts.reserve(net.layers.size() + 1);
    acts.push_back(input);
    for (const auto& l : net.layers) {
        const Tensor& x = acts.back();
        const std::vector<int> out_shape = l.output_shape(x.shape);
        Tensor y(out_shape);
        switch (l.kind) {
            case LayerKind::Conv2D:
                kernels::conv2d_forward(x.data.data(), l.in_h, l.in_w, l.weight.data.data(),
                                        l.kernel, l.stride, l.pad, l.bias[0], y.data.data(),
                                        out_shape[0], out_shape[1]);
                break;
            case LayerKind::ReLU:
                kernels::relu_forward(x.data.data(), y.data.data(), x.size());
                break;
            case LayerKind::MaxPool2D:
                kernels::maxpool_forward(x.data.data(), l.in_h, l.in_w, l.kernel, l.stride,
                                         y.data.data(), out_shape[0], out_shape[1]);
                break;
            case LayerKind::Flatten:
                y.data = x.data;
                break;
            case LayerKind::Linear:
                kernels::linear_forward(x.data.data(), l.weight.data.data(), l.bias.data.data(),
                                        y.data.data(), l.in_dim, l.out_dim);
                break;
            case LayerKind::Tanh:
                kernels::tanh_forward(x.data.data(), y.data.data(), x.size());
                break;
        }
        acts.push_back(std::move(y));
    }
    return acts;
}

}  // namespace

Tensor forward(const Network& net, const Tensor& input) {
    std::vector<Tensor> acts = forward_trace(net, input);
    Tensor out = std::move(acts.back());
    if (!out.all_finite()) throw NetError("forward produced a non-finite output");
    return out;
}

Gradients backward(const Network& net, const Tensor& input, const Tensor& upstream,
                   BackwardOptions opts) {
    const std::vector<Tensor> acts = forward_trace(net, input);
    if (upstream.size() != acts.back().size())
        throw NetError("upstream gradient has " + std::to_string(upstream.size()) +
                       " components, network output has " + std::to_string(acts.back().size()));

    Gradients grads;
    grads.weight.resize(net.layers.size());
    grads.bias.resize(net.layers.size());

    Tensor g = upstream;
    for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
        const LayerSpec& l = net.layers[i];
        const Tensor& x = acts[i];
        const bool need_input_grad = i > 0 || opts.want_input;
        Tensor gin(x.shape);
        switch (l.kind) {
            case LayerKind::Conv2D: {
                const int oh = acts[i + 1].shape[0], ow = acts[i + 1].shape[1];
                if (opts.want_params) {
                    grads.weight[i] = Tensor::zeros(l.weight.shape);
                    grads.bias[i] = Tensor::zeros(l.bias.shape);
                    kernels::conv2d_backward_params(g.data.data(), oh, ow, x.data.data(), l.in_h,
                                                    l.in_w, l.kernel, l.stride, l.pad,
                                                    grads.weight[i].data.data(),
                                                    grads.bias[i].data.data());
                }
                if (need_input_grad)
                    kernels::conv2d_backward_input(g.data.data(), oh, ow, l.weight.data.data(),
                                                   l.kernel, l.stride, l.pad, gin.data.data(),
                                                   l.in_h, l.in_w);
                break;
            }
            case LayerKind::ReLU:
                kernels::relu_backward(x.data.data(), g.data.data(), gin.data.data(), x.size());
                break;
            case LayerKind::MaxPool2D:
                kernels::maxpool_backward(x.data.data(), l.in_h, l.in_w, l.kernel, l.stride,
                                          g.data.data(), acts[i + 1].shape[0], acts[i + 1].shape[1],
                                          gin.data.data());
                break;
            case LayerKind::Flatten:
                gin.data = g.data;
                break;
            case LayerKind::Linear:
                if (opts.want_params) {
                    grads.weight[i] = Tensor::zeros(l.weight.shape);
                    grads.bias[i] = Tensor::zeros(l.bias.shape);
                    kernels::linear_backward_params(g.data.data(), x.data.data(),
                                                    grads.weight[i].data.data(),
                                                    grads.bias[i].data.data(), l.in_dim, l.out_dim);
                }
                if (need_input_grad)
                    kernels::linear_backward_input(g.data.data(), l.weight.data.data(),
                                                   gin.data.data(), l.in_dim, l.out_dim);
                break;
            case LayerKind::Tanh:
                kernels::tanh_backward(acts[i + 1].data.data(), g.data.data(), gin.data.data(),
                                       g.size());
                break;
        }
        if (!need_input_grad) break;
        g = std::move(gin);
    }
    if (opts.want_input) grads.input = std::move(g);
    return grads;
}

OptimizerState OptimizerState::init(const Network& net, Rule rule, float lr) {
    OptimizerState s;
    s.rule = rule;
    s.lr = lr;
    s.m_w.resize(net.layers.size());
    s.v_w.resize(net.layers.size());
    s.m_b.resize(net.layers.size());
    s.v_b.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (net.layers[i].param_count() == 0) continue;
        s.m_w[i] = Tensor::zeros(net.layers[i].weight.shape);
        s.v_w[i] = Tensor::zeros(net.layers[i].weight.shape);
        s.m_b[i] = Tensor::zeros(net.layers[i].bias.shape);
        s.v_b[i] = Tensor::zeros(net.layers[i].bias.shape);
    }
    return s;
}

namespace {

void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v,
                 const OptimizerState& s, double bias1, double bias2) {
    for (std::int64_t j = 0; j < param.size(); ++j) {
        m[j] = s.beta1 * m[j] + (1.0f - s.beta1) * grad[j];
        v[j] = s.beta2 * v[j] + (1.0f - s.beta2) * grad[j] * grad[j];
        const double mhat = m[j] / bias1;
        const double vhat = v[j] / bias2;
        param[j] = static_cast<float>(param[j] - s.lr * mhat / (std::sqrt(vhat) + s.eps));
    }
}

}  // namespace

void optimizer_step(Network& net, const Gradients& grads, OptimizerState& state) {
    if (!grads.congruent_with(net)) throw NetError("gradient shapes do not match network");
    state.step += 1;
    const double bias1 = 1.0 - std::pow(static_cast<double>(state.beta1), static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(static_cast<double>(state.beta2), static_cast<double>(state.step));
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        LayerSpec& l = net.layers[i];
        if (l.param_count() == 0) continue;
        if (state.rule == OptimizerState::Rule::Adam) {
            adam_update(l.weight, grads.weight[i], state.m_w[i], state.v_w[i], state, bias1, bias2);
            adam_update(l.bias, grads.bias[i], state.m_b[i], state.v_b[i], state, bias1, bias2);
        } else {
            for (std::int64_t j = 0; j < l.weight.size(); ++j)
                l.weight[j] -= state.lr * grads.weight[i][j];
            for (std::int64_t j = 0; j < l.bias.size(); ++j)
                l.bias[j] -= state.lr * grads.bias[i][j];
        }
    }
}

// ---------------------------------------------------------------------------
// NNW serialization

namespace {

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    buf.push_back(static_cast<std::uint8_t>(v & 0xff));
    buf.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    buf.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    buf.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& buf, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(buf, bits);
}

struct Cursor {
    const std::vector<std::uint8_t>& buf;
    std::size_t pos = 0;
    int record = -1;  // current layer record, for error messages

    [[noreturn]] void fail(const std::string& what) const {
        std::string where = record >= 0 ? " in record " + std::to_string(record) : "";
        throw NetError("weight file: " + what + where);
    }

    std::uint8_t u8() {
        if (pos + 1 > buf.size()) fail("truncated");
        return buf[pos++];
    }
    std::uint32_t u32() {
        if (pos + 4 > buf.size()) fail("truncated");
        std::uint32_t v = static_cast<std::uint32_t>(buf[pos]) |
                          (static_cast<std::uint32_t>(buf[pos + 1]) << 8) |
                          (static_cast<std::uint32_t>(buf[pos + 2]) << 16) |
                          (static_cast<std::uint32_t>(buf[pos + 3]) << 24);
        pos += 4;
        return v;
    }
    float f32() {
        std::uint32_t bits = u32();
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }
};

std::vector<std::uint32_t> record_extents(const LayerSpec& l) {
    switch (l.kind) {
        case LayerKind::Conv2D:
            return {static_cast<std::uint32_t>(l.in_h), static_cast<std::uint32_t>(l.in_w),
                    static_cast<std::uint32_t>(l.kernel), static_cast<std::uint32_t>(l.stride),
                    static_cast<std::uint32_t>(l.pad)};
        case LayerKind::MaxPool2D:
            return {static_cast<std::uint32_t>(l.in_h), static_cast<std::uint32_t>(l.in_w),
                    static_cast<std::uint32_t>(l.kernel), static_cast<std::uint32_t>(l.stride)};
        case LayerKind::Flatten:
            return {static_cast<std::uint32_t>(l.in_h), static_cast<std::uint32_t>(l.in_w)};
        case LayerKind::Linear:
            return {static_cast<std::uint32_t>(l.in_dim), static_cast<std::uint32_t>(l.out_dim)};
        case LayerKind::ReLU:
        case LayerKind::Tanh:
            return {};
    }
    return {};
}

}  // namespace

std::vector<std::uint8_t> serialize_weights(const Network& net) {
    net.validate();
    std::vector<std::uint8_t> buf;
    buf.push_back('N');
    buf.push_back('N');
    buf.push_back('W');
    buf.push_back('1');
    put_u32(buf, static_cast<std::uint32_t>(net.layers.size()));
    for (const auto& l : net.layers) {
        buf.push_back(static_cast<std::uint8_t>(l.kind));
        const auto extents = record_extents(l);
        buf.push_back(static_cast<std::uint8_t>(extents.size()));
        for (std::uint32_t e : extents) put_u32(buf, e);
        if (l.param_count() > 0) {
            for (float w : l.weight.data) put_f32(buf, w);
            for (float b : l.bias.data) put_f32(buf, b);
        }
    }
    std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
    put_u32(buf, crc);
    return buf;
}

Network deserialize_weights(const std::vector<std::uint8_t>& bytes) {
    Cursor c{bytes};
    if (bytes.size() < 12) c.fail("truncated header");
    if (bytes[0] != 'N' || bytes[1] != 'N' || bytes[2] != 'W' || bytes[3] != '1')
        c.fail("bad magic (expected NNW1)");

    const std::uint32_t stored_crc = static_cast<std::uint32_t>(bytes[bytes.size() - 4]) |
                                     (static_cast<std::uint32_t>(bytes[bytes.size() - 3]) << 8) |
                                     (static_cast<std::uint32_t>(bytes[bytes.size() - 2]) << 16) |
                                     (static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24);
    const std::uint32_t actual_crc = static_cast<std::uint32_t>(crc32(
        0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size() - 4)));
    if (stored_crc != actual_crc) c.fail("CRC32 mismatch");

    c.pos = 4;
    const std::uint32_t count = c.u32();
    if (count == 0) c.fail("layer count is zero");
    if (count > 4096) c.fail("layer count " + std::to_string(count) + " is implausible");

    Network net;
    for (std::uint32_t r = 0; r < count; ++r) {
        c.record = static_cast<int>(r);
        const std::uint8_t tag = c.u8();
        if (tag > 5) c.fail("unknown layer kind tag " + std::to_string(tag));
        const LayerKind kind = static_cast<LayerKind>(tag);
        const std::uint8_t dim_count = c.u8();
        std::vector<std::uint32_t> ext(dim_count);
        for (auto& e : ext) e = c.u32();

        auto want_dims = [&](std::size_t n) {
            if (ext.size() != n)
                c.fail(std::string(layer_kind_name(kind)) + " needs " + std::to_string(n) +
                       " extents, found " + std::to_string(ext.size()));
            for (std::size_t i = 0; i < n; ++i)
                if (ext[i] > (1u << 24)) c.fail("extent out of range");
        };

        LayerSpec l;
        switch (kind) {
            case LayerKind::Conv2D: {
                want_dims(5);
                if (ext[0] == 0 || ext[1] == 0 || ext[2] == 0 || ext[3] == 0)
                    c.fail("Conv2D has a zero extent");
                l = LayerSpec::conv2d(static_cast<int>(ext[0]), static_cast<int>(ext[1]),
                                      static_cast<int>(ext[2]), static_cast<int>(ext[3]),
                                      static_cast<int>(ext[4]));
                for (auto& w : l.weight.data) w = c.f32();
                for (auto& b : l.bias.data) b = c.f32();
                break;
            }
            case LayerKind::ReLU:
                want_dims(0);
                l = LayerSpec::relu();
                break;
            case LayerKind::MaxPool2D:
                want_dims(4);
                if (ext[0] == 0 || ext[1] == 0 || ext[2] == 0 || ext[3] == 0)
                    c.fail("MaxPool2D has a zero extent");
                l = LayerSpec::maxpool(static_cast<int>(ext[0]), static_cast<int>(ext[1]),
                                       static_cast<int>(ext[2]), static_cast<int>(ext[3]));
                break;
            case LayerKind::Flatten:
                want_dims(2);
                if (ext[0] == 0 || ext[1] == 0) c.fail("Flatten has a zero extent");
                l = LayerSpec::flatten(static_cast<int>(ext[0]), static_cast<int>(ext[1]));
                break;
            case LayerKind::Linear: {
                want_dims(2);
                if (ext[0] == 0 || ext[1] == 0) c.fail("Linear has a zero extent");
                l = LayerSpec::linear(static_cast<int>(ext[0]), static_cast<int>(ext[1]));
                for (auto& w : l.weight.data) w = c.f32();
                for (auto& b : l.bias.data) b = c.f32();
                break;
            }
            case LayerKind::Tanh:
                want_dims(0);
                l = LayerSpec::tanh_layer();
                break;
        }
        net.layers.push_back(std::move(l));
    }
    c.record = -1;
    if (c.pos != bytes.size() - 4) c.fail("trailing bytes after last record");

    // infer the input shape from the first geometric layer
    for (const auto& l : net.layers) {
        if (l.kind == LayerKind::Conv2D || l.kind == LayerKind::MaxPool2D ||
            l.kind == LayerKind::Flatten) {
            net.input_shape = {l.in_h, l.in_w};
            break;
        }
        if (l.kind == LayerKind::Linear) {
            net.input_shape = {l.in_dim};
            break;
        }
    }
    if (net.input_shape.empty()) c.fail("cannot infer input shape (no shaped layer)");

    std::vector<int> cur = net.input_shape;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        try {
            cur = net.layers[i].output_shape(cur);
        } catch (const NetError& e) {
            throw NetError("weight file: record " + std::to_string(i) +
                           " does not compose: " + e.what());
        }
    }
    if (cur.size() != 1) c.fail("network output is not rank-1");
    net.output_dim = cur[0];
    net.validate();
    return net;
}

void save_weights(const Network& net, const std::string& path) {
    const auto bytes = serialize_weights(net);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw NetError("cannot open '" + path + "' for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw NetError("write to '" + path + "' failed");
}

Network load_weights(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw NetError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return deserialize_weights(bytes);
}

}  // namespace tracknet
