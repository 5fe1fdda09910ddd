#include "neva/attention.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace neva::attention {

namespace fov = neva::foveation;

void NevaTrainConfig::validate() const {
    if (horizon < 1) throw InvalidArgument("horizon must be at least 1");
    if (unroll_depth < 1 || unroll_depth > horizon)
        throw InvalidArgument("unroll_depth must lie in [1, horizon]");
    if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
    if (batch_size < 1) throw InvalidArgument("batch_size must be at least 1");
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
    foveation.validate();
}

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

AttentionModel::AttentionModel(nn::Network network) : network_(std::move(network)) {
    if (network_.output_shape().size() != 2) throw InvalidArgument("attention network must emit two values");
}

Fixation AttentionModel::next_fixation(const Image& perceived) const {
    if (nn::shape_of(perceived) != network_.input_shape())
        throw InvalidArgument("perceived image does not match the attention input shape");
    const Image out = network_.forward(perceived);
    return {sigmoid(out.data()[0]), sigmoid(out.data()[1])};
}

AttentionModel::Step AttentionModel::traced_step(const Image& perceived) const {
    if (nn::shape_of(perceived) != network_.input_shape())
        throw InvalidArgument("perceived image does not match the attention input shape");
    Step step;
    const Image out = network_.forward(perceived, step.trace);
    step.fixation = {sigmoid(out.data()[0]), sigmoid(out.data()[1])};
    return step;
}

Image AttentionModel::backward(const Step& step, fov::FixationGradient grad, std::span<double> param_grad) const {
    const nn::Shape out_shape = network_.output_shape();
    Image g(out_shape.height, out_shape.width, out_shape.channels);
    const double x = step.fixation.x;
    const double y = step.fixation.y;
    g.data()[0] = grad.dx * x * (1.0 - x);
    g.data()[1] = grad.dy * y * (1.0 - y);
    return network_.backward(step.trace, g, param_grad);
}

nlohmann::json AttentionModel::to_json() const {
    return {{"format", "neva-attention-model"}, {"version", 1}, {"network", network_.to_json()}};
}

AttentionModel AttentionModel::from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "neva-attention-model")
        throw InvalidArgument("not an attention model checkpoint");
    return AttentionModel(nn::Network::from_json(j.at("network")));
}

void AttentionModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_json().dump() << '\n';
}

AttentionModel AttentionModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    return from_json(nlohmann::json::parse(in));
}

std::vector<nn::LayerSpec> default_attention_layers() {
    using nn::LayerSpec;
    return {LayerSpec::conv(8), LayerSpec::relu(), LayerSpec::avgpool(),
            LayerSpec::conv(16), LayerSpec::relu(), LayerSpec::avgpool(),
            LayerSpec::conv(16), LayerSpec::relu(), LayerSpec::avgpool(),
            LayerSpec::dense(32), LayerSpec::relu(), LayerSpec::dense(2)};
}

AttentionModel make_attention_model(nn::Shape input, std::uint64_t seed, const nlohmann::json& architecture) {
    auto layers = architecture.is_null() ? default_attention_layers() : nn::layers_from_json(architecture);
    return AttentionModel(nn::Network(input, std::move(layers), seed));
}

namespace {

// Subtracts each channel's mean. The map is linear and self-adjoint, so the
// same function carries gradients back.
Image center_channels(Image im) {
    for (int c = 0; c < im.channels(); ++c) {
        auto p = im.plane(c);
        const double mean = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
        for (double& v : p) v -= mean;
    }
    return im;
}

}  // namespace

Image to_attention_input(const AttentionModel& model, const Image& perceived) {
    const nn::Shape in = model.input_shape();
    return center_channels(adapt_channels(resize_bilinear(perceived, in.height, in.width), in.channels));
}

Image from_attention_grad(const Image& grad, const Image& perceived) {
    return resize_bilinear_adjoint(adapt_channels_adjoint(center_channels(grad), perceived.channels()),
                                   perceived.height(), perceived.width());
}

double rollout_gradient(const AttentionModel& model, std::shared_ptr<const Image> sharp,
                        std::shared_ptr<const Image> coarse, const StepLoss& loss, std::size_t index,
                        const NevaTrainConfig& cfg, std::span<double> grad) {
    const auto horizon = static_cast<std::size_t>(cfg.horizon);
    const auto depth = static_cast<std::size_t>(cfg.unroll_depth);
    std::vector<fov::PerceptualState> states;
    std::vector<AttentionModel::Step> steps;
    states.push_back(fov::init_state(std::move(sharp), std::move(coarse), cfg.foveation));
    double total = 0.0;
    for (std::size_t t = 1; t <= horizon; ++t) {
        const Image& prev = states.back().perceived();
        steps.push_back(model.traced_step(to_attention_input(model, prev)));
        states.push_back(fov::update_state(states.back(), steps.back().fixation));

        Image grad_perceived;
        total += loss(states.back().perceived(), index, &grad_perceived);

        // Truncated back-propagation over fixations t, t-1, ..., t-depth+1.
        const std::size_t first = t >= depth ? t - depth + 1 : 1;
        Image grad_acc = fov::accumulator_grad(states[t], grad_perceived);
        for (std::size_t s = t;; --s) {
            const Image& im = states[s].stimulus();
            const auto gxi = fov::gaussian_blob_vjp(im.height(), im.width(), steps[s - 1].fixation,
                                                    cfg.foveation.sigma_fovea, grad_acc);
            const Image grad_in = model.backward(steps[s - 1], gxi, grad);
            if (s == first) break;
            // Reach state s-1 through the attention input and the memory decay.
            const Image grad_prev = from_attention_grad(grad_in, states[s - 1].perceived());
            Image next_acc = fov::accumulator_grad(states[s - 1], grad_prev);
            auto na = next_acc.values();
            auto ga = grad_acc.values();
            for (std::size_t i = 0; i < na.size(); ++i) na[i] += cfg.foveation.gamma * ga[i];
            grad_acc = std::move(next_acc);
        }
    }
    return total;
}

AttentionModel train_attention(AttentionModel model, const std::vector<Image>& stimuli, const StepLoss& loss,
                               const NevaTrainConfig& cfg, AttentionTrainLog* log) {
    cfg.validate();
    if (stimuli.empty()) throw InvalidArgument("empty training set");
    if (!loss) throw InvalidArgument("missing loss function");

    // Coarse images never change; compute them once.
    std::vector<std::shared_ptr<const Image>> sharp, coarse;
    for (const Image& s : stimuli) {
        validate_stimulus(s);
        sharp.push_back(std::make_shared<const Image>(s));
        coarse.push_back(std::make_shared<const Image>(fov::blur_stimulus(s, cfg.foveation.sigma_blur)));
    }

    std::mt19937_64 rng(cfg.seed);
    nn::Adam adam(model.network().parameter_count(), {cfg.learning_rate});
    std::vector<double> grad(model.network().parameter_count());
    std::vector<std::size_t> order(stimuli.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::ranges::fill(grad, 0.0);
            for (std::size_t b = start; b < stop; ++b)
                epoch_total += rollout_gradient(model, sharp[order[b]], coarse[order[b]], loss, order[b], cfg, grad);
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (double& g : grad) g *= inv;
            adam.step(model.network().parameters(), grad);
        }
        if (log != nullptr)
            log->epoch_loss.push_back(epoch_total / static_cast<double>(order.size() * cfg.horizon));
    }
    return model;
}

AttentionModel train_attention(AttentionModel model, const tasks::TaskModel& task,
                               const std::vector<tasks::LabeledStimulus>& train_set, const NevaTrainConfig& cfg,
                               AttentionTrainLog* log) {
    std::vector<Image> images;
    images.reserve(train_set.size());
    for (const auto& item : train_set) {
        const bool is_class = std::holds_alternative<int>(item.target);
        if (is_class != (task.kind() == tasks::TaskKind::classification))
            throw InvalidArgument("training targets do not match the task model kind");
        images.push_back(item.stimulus);
    }
    StepLoss loss = [&](const Image& perceived, std::size_t index, Image* grad) {
        return task.loss(perceived, train_set[index].target, grad);
    };
    return train_attention(std::move(model), images, loss, cfg, log);
}

Scanpath generate_scanpath(const AttentionModel& model, const Image& s, int length,
                           const fov::FoveationConfig& cfg) {
    if (length < 1) throw InvalidArgument("scanpath length must be at least 1");
    fov::PerceptualState state = fov::init_state(s, cfg);
    Scanpath path;
    path.fixations.reserve(static_cast<std::size_t>(length));
    for (int t = 0; t < length; ++t) {
        const Fixation next = model.next_fixation(to_attention_input(model, state.perceived()));
        path.fixations.push_back(next);
        state = fov::update_state(state, next);
    }
    return path;
}

}  // namespace neva::attention
