#pragma once

#include "tracknet/tensor.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tracknet {

struct NetError : std::runtime_error {
    explicit NetError(const std::string& msg) : std::runtime_error("netcore: " + msg) {}
};

enum class LayerKind : std::uint8_t {
    Conv2D = 0,
    ReLU = 1,
    MaxPool2D = 2,
    Flatten = 3,
    Linear = 4,
    Tanh = 5,
};

const char* layer_kind_name(LayerKind k);

// One layer record. Conv2D is single-channel with a square kernel and zero
// padding; MaxPool2D is a square window. Geometry fields are meaningful per
// kind; weight/bias are populated for Conv2D ([k,k],[1]) and Linear
// ([out,in],[out]) only.
struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    int in_h = 0, in_w = 0;
    int kernel = 0, stride = 1, pad = 0;
    int in_dim = 0, out_dim = 0;
    Tensor weight, bias;

    std::int64_t param_count() const;
    std::vector<int> output_shape(const std::vector<int>& in) const;

    static LayerSpec conv2d(int in_h, int in_w, int kernel = 3, int stride = 1, int pad = 1);
    static LayerSpec relu();
    static LayerSpec maxpool(int in_h, int in_w, int window = 2, int stride = 2);
    static LayerSpec flatten(int in_h, int in_w);
    static LayerSpec linear(int in_dim, int out_dim);
    static LayerSpec tanh_layer();
};

struct Network {
    std::vector<LayerSpec> layers;
    std::vector<int> input_shape;  // [side, side] for image nets, [n] for dense stacks
    int output_dim = 0;

    std::vector<std::int64_t> per_layer_param_counts() const;  // parameterized layers only
    std::int64_t total_param_count() const;
    int input_side() const;  // valid for 2-D inputs

    // checks the layer chain composes from input_shape to a rank-1 output
    void validate() const;
};

// Two conv/relu/pool blocks into three fully connected layers with a tanh
// head; generic over the input side (must be a positive multiple of 4).
Network make_track_network(int side, std::uint64_t seed);

// canonical 112x112 network
Network init_network(std::uint64_t seed);

// random init (uniform +-sqrt(1/fan_in), zero biases) of an arbitrary stack
Network make_network(std::vector<LayerSpec> layers, std::vector<int> input_shape,
                     std::uint64_t seed);

struct Gradients {
    std::vector<Tensor> weight;  // aligned with Network::layers; empty when unparameterized
    std::vector<Tensor> bias;
    Tensor input;  // d(upstream . output)/d(image); empty when not requested

    static Gradients zeros_like(const Network& net);
    void accumulate(const Gradients& other, float scale);
    void scale(float s);
    bool congruent_with(const Network& net) const;
};

Tensor forward(const Network& net, const Tensor& input);

struct BackwardOptions {
    bool want_params = true;
    bool want_input = true;
};

// Gradients of upstream . output w.r.t. every parameter (and the input).
// Max-pool routes gradient to the first maximal element per window.
Gradients backward(const Network& net, const Tensor& input, const Tensor& upstream,
                   BackwardOptions opts = {});

struct OptimizerState {
    enum class Rule { Adam, Sgd };
    Rule rule = Rule::Adam;
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    std::int64_t step = 0;
    std::vector<Tensor> m_w, v_w, m_b, v_b;  // moment accumulators, aligned with layers

    static OptimizerState init(const Network& net, Rule rule = Rule::Adam, float lr = 1e-3f);
};

void optimizer_step(Network& net, const Gradients& grads, OptimizerState& state);

// NNW weight format: "NNW1", u32 record count, per-layer records (kind tag,
// extent list, raw f32 parameters), trailing CRC32. All integers little-endian.
void save_weights(const Network& net, const std::string& path);
Network load_weights(const std::string& path);

std::vector<std::uint8_t> serialize_weights(const Network& net);
Network deserialize_weights(const std::vector<std::uint8_t>& bytes);

}  // namespace tracknet
