#pragma once

// Minimal feed-forward network engine: a fixed sequence of layers over a
// single (C,H,W) sample, with reverse-mode gradients for both parameters and
// the input. Inner loops run through neva::simd kernels.

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "neva/image.hpp"

namespace neva::nn {

struct Shape {
    int channels = 0;
    int height = 0;
    int width = 0;

    std::size_t size() const noexcept {
        return static_cast<std::size_t>(channels) * height * width;
    }
    friend bool operator==(const Shape&, const Shape&) = default;
};

Shape shape_of(const Image& x) noexcept;

enum class LayerKind { conv, dense, relu, sigmoid, avgpool, upsample };

struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    int out = 0;  // conv: output channels, dense: output units
    int kernel = 3;
    int stride = 1;
    int pad = 1;

    static LayerSpec conv(int out, int kernel = 3, int stride = 1, int pad = 1) {
        return {LayerKind::conv, out, kernel, stride, pad};
    }
    static LayerSpec dense(int out) { return {LayerKind::dense, out, 0, 0, 0}; }
    static LayerSpec relu() { return {LayerKind::relu}; }
    static LayerSpec sigmoid() { return {LayerKind::sigmoid}; }
    static LayerSpec avgpool() { return {LayerKind::avgpool}; }
    static LayerSpec upsample() { return {LayerKind::upsample}; }
};

nlohmann::json to_json(const LayerSpec& spec);
LayerSpec layer_from_json(const nlohmann::json& j);
std::vector<LayerSpec> layers_from_json(const nlohmann::json& j);

class Network {
  public:
    // Activations kept from a forward pass: activations[0] is the input,
    // activations[i + 1] the output of layer i.
    struct Trace {
        std::vector<Image> activations;
    };

    Network() = default;
    Network(Shape input, std::vector<LayerSpec> layers, std::uint64_t seed);

    Shape input_shape() const noexcept { return input_; }
    Shape output_shape() const noexcept;
    std::vector<LayerSpec> layer_specs() const;

    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    Image forward(const Image& x) const;
    Image forward(const Image& x, Trace& trace) const;

    // Back-propagates grad_output through the traced pass. Parameter
    // gradients are accumulated into param_grad unless it is empty. Returns
    // the gradient with respect to the input.
    Image backward(const Trace& trace, const Image& grad_output, std::span<double> param_grad) const;

    nlohmann::json to_json() const;
    static Network from_json(const nlohmann::json& j);

  private:
    struct Layer {
        LayerSpec spec;
        Shape in;
        Shape out;
        std::size_t weight_offset = 0;
        std::size_t weight_count = 0;
        std::size_t bias_offset = 0;
    };

    void build(Shape input, std::vector<LayerSpec> specs);
    Image layer_forward(const Layer& layer, const Image& x) const;
    Image layer_backward(const Layer& layer, const Image& x, const Image& y, const Image& grad_y,
                         std::span<double> param_grad) const;

    Shape input_;
    std::vector<Layer> layers_;
    std::vector<double> params_;
};

// Softmax cross-entropy of logits (any shape, flattened) against a class
// index. Writes d loss / d logits into grad when non-null.
double softmax_cross_entropy(const Image& logits, int label, Image* grad = nullptr);

std::vector<double> softmax(const Image& logits);

// Mean squared error over all elements.
double mean_squared_error(const Image& prediction, const Image& target, Image* grad = nullptr);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class Adam {
  public:
    Adam(std::size_t parameter_count, AdamConfig cfg);

    // One update with the given (already averaged) gradient.
    void step(std::span<double> params, std::span<const double> grad);
    long long steps() const noexcept { return t_; }

  private:
    AdamConfig cfg_;
    std::vector<double> m_;
    std::vector<double> v_;
    long long t_ = 0;
};

}  // namespace neva::nn
