#include "neva/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "neva/simd/kernels.hpp"

namespace neva::nn {

Shape shape_of(const Image& x) noexcept { return {x.channels(), x.height(), x.width()}; }

namespace {

const char* kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv: return "conv";
        case LayerKind::dense: return "dense";
        case LayerKind::relu: return "relu";
        case LayerKind::sigmoid: return "sigmoid";
        case LayerKind::avgpool: return "avgpool";
        case LayerKind::upsample: return "upsample";
    }
    return "?";
}

LayerKind kind_from_name(const std::string& name) {
    for (auto k : {LayerKind::conv, LayerKind::dense, LayerKind::relu, LayerKind::sigmoid,
                   LayerKind::avgpool, LayerKind::upsample})
        if (name == kind_name(k)) return k;
    throw InvalidArgument("unknown layer type '" + name + "'");
}

Image make(Shape s) { return Image(s.height, s.width, s.channels); }

struct ConvGeometry {
    int channels, height, width, kernel, stride, pad, out_h, out_w;
    std::size_t rows() const { return static_cast<std::size_t>(channels) * kernel * kernel; }
    std::size_t cols() const { return static_cast<std::size_t>(out_h) * out_w; }
};

ConvGeometry geometry(const LayerSpec& spec, Shape in, Shape out) {
    return {in.channels, in.height, in.width, spec.kernel, spec.stride, spec.pad, out.height, out.width};
}

std::vector<double> im2col(const Image& x, const ConvGeometry& g) {
    std::vector<double> col(g.rows() * g.cols(), 0.0);
    std::size_t row = 0;
    for (int c = 0; c < g.channels; ++c)
        for (int ky = 0; ky < g.kernel; ++ky)
            for (int kx = 0; kx < g.kernel; ++kx, ++row) {
                double* dst = col.data() + row * g.cols();
                for (int oy = 0; oy < g.out_h; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky;
                    if (iy < 0 || iy >= g.height) continue;
                    for (int ox = 0; ox < g.out_w; ++ox) {
                        const int ix = ox * g.stride - g.pad + kx;
                        if (ix >= 0 && ix < g.width) dst[oy * g.out_w + ox] = x.at(iy, ix, c);
                    }
                }
            }
    return col;
}

void col2im(const std::vector<double>& col, const ConvGeometry& g, Image& grad_x) {
    std::size_t row = 0;
    for (int c = 0; c < g.channels; ++c)
        for (int ky = 0; ky < g.kernel; ++ky)
            for (int kx = 0; kx < g.kernel; ++kx, ++row) {
                const double* src = col.data() + row * g.cols();
                for (int oy = 0; oy < g.out_h; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky;
                    if (iy < 0 || iy >= g.height) continue;
                    for (int ox = 0; ox < g.out_w; ++ox) {
                        const int ix = ox * g.stride - g.pad + kx;
                        if (ix >= 0 && ix < g.width) grad_x.at(iy, ix, c) += src[oy * g.out_w + ox];
                    }
                }
            }
}

}  // namespace

nlohmann::json to_json(const LayerSpec& spec) {
    nlohmann::json j{{"type", kind_name(spec.kind)}};
    if (spec.kind == LayerKind::conv) {
        j["out"] = spec.out;
        j["kernel"] = spec.kernel;
        j["stride"] = spec.stride;
        j["pad"] = spec.pad;
    } else if (spec.kind == LayerKind::dense) {
        j["out"] = spec.out;
    }
    return j;
}

LayerSpec layer_from_json(const nlohmann::json& j) {
    LayerSpec spec;
    spec.kind = kind_from_name(j.at("type").get<std::string>());
    if (spec.kind == LayerKind::conv) {
        spec.out = j.at("out").get<int>();
        spec.kernel = j.value("kernel", 3);
        spec.stride = j.value("stride", 1);
        spec.pad = j.value("pad", spec.kernel / 2);
    } else if (spec.kind == LayerKind::dense) {
        spec.out = j.at("out").get<int>();
    }
    return spec;
}

std::vector<LayerSpec> layers_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw InvalidArgument("architecture must be a list of layers");
    std::vector<LayerSpec> out;
    for (const auto& item : j) out.push_back(layer_from_json(item));
    return out;
}

Network::Network(Shape input, std::vector<LayerSpec> layers, std::uint64_t seed) {
    build(input, std::move(layers));
    std::mt19937_64 rng(seed);
    for (const Layer& layer : layers_) {
        if (layer.weight_count == 0) continue;
        const std::size_t fan_in =
            layer.spec.kind == LayerKind::conv
                ? static_cast<std::size_t>(layer.in.channels) * layer.spec.kernel * layer.spec.kernel
                : layer.in.size();
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
        for (std::size_t i = 0; i < layer.weight_count; ++i) params_[layer.weight_offset + i] = dist(rng);
    }
}

void Network::build(Shape input, std::vector<LayerSpec> specs) {
    if (input.channels < 1 || input.height < 1 || input.width < 1)
        throw InvalidArgument("network input shape must be positive");
    input_ = input;
    layers_.clear();
    std::size_t offset = 0;
    Shape cur = input;
    for (const LayerSpec& spec : specs) {
        Layer layer{spec, cur, cur};
        switch (spec.kind) {
            case LayerKind::conv: {
                if (spec.out < 1 || spec.kernel < 1 || spec.stride < 1 || spec.pad < 0)
                    throw InvalidArgument("invalid convolution parameters");
                const int oh = (cur.height + 2 * spec.pad - spec.kernel) / spec.stride + 1;
                const int ow = (cur.width + 2 * spec.pad - spec.kernel) / spec.stride + 1;
                if (oh < 1 || ow < 1) throw InvalidArgument("convolution output would be empty");
                layer.out = {spec.out, oh, ow};
                layer.weight_count = static_cast<std::size_t>(spec.out) * cur.channels * spec.kernel * spec.kernel;
                break;
            }
            case LayerKind::dense:
                if (spec.out < 1) throw InvalidArgument("dense layer needs at least one unit");
                layer.out = {spec.out, 1, 1};
                layer.weight_count = static_cast<std::size_t>(spec.out) * cur.size();
                break;
            case LayerKind::avgpool:
                if (cur.height < 2 || cur.width < 2) throw InvalidArgument("input too small to pool");
                layer.out = {cur.channels, cur.height / 2, cur.width / 2};
                break;
            case LayerKind::upsample:
                layer.out = {cur.channels, cur.height * 2, cur.width * 2};
                break;
            case LayerKind::relu:
            case LayerKind::sigmoid:
                break;
        }
        if (layer.weight_count > 0) {
            layer.weight_offset = offset;
            layer.bias_offset = offset + layer.weight_count;
            offset += layer.weight_count + static_cast<std::size_t>(layer.out.channels);
        }
        cur = layer.out;
        layers_.push_back(layer);
    }
    params_.assign(offset, 0.0);
}

Shape Network::output_shape() const noexcept { return layers_.empty() ? input_ : layers_.back().out; }

std::vector<LayerSpec> Network::layer_specs() const {
    std::vector<LayerSpec> out;
    for (const Layer& l : layers_) out.push_back(l.spec);
    return out;
}

Image Network::forward(const Image& x) const {
    if (shape_of(x) != input_) throw InvalidArgument("network input shape mismatch");
    Image cur = x;
    for (const Layer& layer : layers_) cur = layer_forward(layer, cur);
    return cur;
}

Image Network::forward(const Image& x, Trace& trace) const {
    if (shape_of(x) != input_) throw InvalidArgument("network input shape mismatch");
    trace.activations.clear();
    trace.activations.reserve(layers_.size() + 1);
    trace.activations.push_back(x);
    for (const Layer& layer : layers_) trace.activations.push_back(layer_forward(layer, trace.activations.back()));
    return trace.activations.back();
}

Image Network::backward(const Trace& trace, const Image& grad_output, std::span<double> param_grad) const {
    if (trace.activations.size() != layers_.size() + 1) throw InvalidArgument("trace does not match network");
    if (!param_grad.empty() && param_grad.size() != params_.size())
        throw InvalidArgument("parameter gradient buffer has the wrong size");
    if (shape_of(grad_output) != output_shape()) throw InvalidArgument("output gradient shape mismatch");
    Image grad = grad_output;
    for (std::size_t i = layers_.size(); i-- > 0;)
        grad = layer_backward(layers_[i], trace.activations[i], trace.activations[i + 1], grad, param_grad);
    return grad;
}

Image Network::layer_forward(const Layer& layer, const Image& x) const {
    const auto& kern = simd::active();
    Image y = make(layer.out);
    switch (layer.spec.kind) {
        case LayerKind::conv: {
            const ConvGeometry g = geometry(layer.spec, layer.in, layer.out);
            const auto col = im2col(x, g);
            const double* w = params_.data() + layer.weight_offset;
            const double* b = params_.data() + layer.bias_offset;
            const std::size_t n = g.cols();
            for (int o = 0; o < layer.out.channels; ++o) {
                double* dst = y.plane(o).data();
                std::fill(dst, dst + n, b[o]);
                const double* wo = w + static_cast<std::size_t>(o) * g.rows();
                for (std::size_t r = 0; r < g.rows(); ++r) kern.axpy(wo[r], col.data() + r * n, dst, n);
            }
            break;
        }
        case LayerKind::dense: {
            const std::size_t n = layer.in.size();
            const double* w = params_.data() + layer.weight_offset;
            const double* b = params_.data() + layer.bias_offset;
            for (int o = 0; o < layer.out.channels; ++o)
                y.data()[o] = b[o] + kern.dot(w + static_cast<std::size_t>(o) * n, x.data(), n);
            break;
        }
        case LayerKind::relu:
            kern.relu(x.data(), y.data(), x.size());
            break;
        case LayerKind::sigmoid:
            for (std::size_t i = 0; i < x.size(); ++i) y.data()[i] = 1.0 / (1.0 + std::exp(-x.data()[i]));
            break;
        case LayerKind::avgpool:
            for (int c = 0; c < layer.out.channels; ++c)
                for (int oy = 0; oy < layer.out.height; ++oy)
                    for (int ox = 0; ox < layer.out.width; ++ox)
                        y.at(oy, ox, c) = 0.25 * (x.at(2 * oy, 2 * ox, c) + x.at(2 * oy, 2 * ox + 1, c) +
                                                  x.at(2 * oy + 1, 2 * ox, c) + x.at(2 * oy + 1, 2 * ox + 1, c));
            break;
        case LayerKind::upsample:
            for (int c = 0; c < layer.out.channels; ++c)
                for (int oy = 0; oy < layer.out.height; ++oy)
                    for (int ox = 0; ox < layer.out.width; ++ox) y.at(oy, ox, c) = x.at(oy / 2, ox / 2, c);
            break;
    }
    return y;
}

Image Network::layer_backward(const Layer& layer, const Image& x, const Image& y, const Image& grad_y,
                              std::span<double> param_grad) const {
    const auto& kern = simd::active();
    const bool want_params = !param_grad.empty();
    Image gx = make(layer.in);
    switch (layer.spec.kind) {
        case LayerKind::conv: {
            const ConvGeometry g = geometry(layer.spec, layer.in, layer.out);
            const std::size_t n = g.cols();
            const std::size_t rows = g.rows();
            const double* w = params_.data() + layer.weight_offset;
            std::vector<double> dcol(rows * n, 0.0);
            if (want_params) {
                const auto col = im2col(x, g);
                double* dw = param_grad.data() + layer.weight_offset;
                double* db = param_grad.data() + layer.bias_offset;
                for (int o = 0; o < layer.out.channels; ++o) {
                    const double* go = grad_y.plane(o).data();
                    double* dwo = dw + static_cast<std::size_t>(o) * rows;
                    for (std::size_t r = 0; r < rows; ++r) dwo[r] += kern.dot(go, col.data() + r * n, n);
                    double s = 0.0;
                    for (std::size_t i = 0; i < n; ++i) s += go[i];
                    db[o] += s;
                }
            }
            for (int o = 0; o < layer.out.channels; ++o) {
                const double* go = grad_y.plane(o).data();
                const double* wo = w + static_cast<std::size_t>(o) * rows;
                for (std::size_t r = 0; r < rows; ++r) kern.axpy(wo[r], go, dcol.data() + r * n, n);
            }
            col2im(dcol, g, gx);
            break;
        }
        case LayerKind::dense: {
            const std::size_t n = layer.in.size();
            const double* w = params_.data() + layer.weight_offset;
            for (int o = 0; o < layer.out.channels; ++o) {
                const double go = grad_y.data()[o];
                if (want_params) {
                    kern.axpy(go, x.data(), param_grad.data() + layer.weight_offset + static_cast<std::size_t>(o) * n, n);
                    param_grad[layer.bias_offset + static_cast<std::size_t>(o)] += go;
                }
                kern.axpy(go, w + static_cast<std::size_t>(o) * n, gx.data(), n);
            }
            break;
        }
        case LayerKind::relu:
            kern.relu_backward(x.data(), grad_y.data(), gx.data(), x.size());
            break;
        case LayerKind::sigmoid:
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double s = y.data()[i];
                gx.data()[i] = grad_y.data()[i] * s * (1.0 - s);
            }
            break;
        case LayerKind::avgpool:
            for (int c = 0; c < layer.out.channels; ++c)
                for (int oy = 0; oy < layer.out.height; ++oy)
                    for (int ox = 0; ox < layer.out.width; ++ox) {
                        const double g = 0.25 * grad_y.at(oy, ox, c);
                        gx.at(2 * oy, 2 * ox, c) += g;
                        gx.at(2 * oy, 2 * ox + 1, c) += g;
                        gx.at(2 * oy + 1, 2 * ox, c) += g;
                        gx.at(2 * oy + 1, 2 * ox + 1, c) += g;
                    }
            break;
        case LayerKind::upsample:
            for (int c = 0; c < layer.out.channels; ++c)
                for (int oy = 0; oy < layer.out.height; ++oy)
                    for (int ox = 0; ox < layer.out.width; ++ox) gx.at(oy / 2, ox / 2, c) += grad_y.at(oy, ox, c);
            break;
    }
    return gx;
}

nlohmann::json Network::to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const Layer& l : layers_) layers.push_back(nn::to_json(l.spec));
    return {{"input", {input_.channels, input_.height, input_.width}},
            {"layers", layers},
            {"parameters", params_}};
}

Network Network::from_json(const nlohmann::json& j) {
    const auto in = j.at("input").get<std::vector<int>>();
    if (in.size() != 3) throw InvalidArgument("network input must be [channels, height, width]");
    Network net;
    net.build({in[0], in[1], in[2]}, layers_from_json(j.at("layers")));
    auto params = j.at("parameters").get<std::vector<double>>();
    if (params.size() != net.params_.size())
        throw InvalidArgument("checkpoint parameter count does not match architecture");
    net.params_ = std::move(params);
    return net;
}

std::vector<double> softmax(const Image& logits) {
    auto v = logits.values();
    std::vector<double> p(v.begin(), v.end());
    const double mx = *std::ranges::max_element(p);
    double total = 0.0;
    for (double& e : p) {
        e = std::exp(e - mx);
        total += e;
    }
    for (double& e : p) e /= total;
    return p;
}

double softmax_cross_entropy(const Image& logits, int label, Image* grad) {
    auto v = logits.values();
    if (label < 0 || static_cast<std::size_t>(label) >= v.size())
        throw InvalidArgument("class label out of range");
    const double mx = *std::ranges::max_element(v);
    double total = 0.0;
    for (double e : v) total += std::exp(e - mx);
    const double log_z = mx + std::log(total);
    if (grad != nullptr) {
        *grad = Image(logits.height(), logits.width(), logits.channels());
        for (std::size_t i = 0; i < v.size(); ++i) grad->data()[i] = std::exp(v[i] - log_z);
        grad->data()[label] -= 1.0;
    }
    return std::max(0.0, log_z - v[static_cast<std::size_t>(label)]);
}

double mean_squared_error(const Image& prediction, const Image& target, Image* grad) {
    if (!prediction.same_shape(target)) throw InvalidArgument("prediction and target shapes differ");
    const std::size_t n = prediction.size();
    double sum = 0.0;
    if (grad != nullptr) *grad = Image(prediction.height(), prediction.width(), prediction.channels());
    for (std::size_t i = 0; i < n; ++i) {
        const double d = prediction.data()[i] - target.data()[i];
        sum += d * d;
        if (grad != nullptr) grad->data()[i] = 2.0 * d / static_cast<double>(n);
    }
    return sum / static_cast<double>(n);
}

Adam::Adam(std::size_t parameter_count, AdamConfig cfg)
    : cfg_(cfg), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw InvalidArgument("optimizer state does not match parameter count");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
        params[i] -= cfg_.learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.epsilon);
    }
}

}  // namespace neva::nn
