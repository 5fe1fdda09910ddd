#include "neva/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

namespace neva::tasks {

std::string to_string(TaskKind kind) {
    return kind == TaskKind::classification ? "classification" : "reconstruction";
}

TaskKind task_kind_from_string(const std::string& name) {
    if (name == "classification") return TaskKind::classification;
    if (name == "reconstruction") return TaskKind::reconstruction;
    throw InvalidArgument("unknown task kind '" + name + "'");
}

TaskModel::TaskModel(TaskKind kind, nn::Network network, int class_count)
    : kind_(kind),
      network_(std::move(network)),
      class_count_(class_count),
      evaluations_(std::make_shared<std::atomic<std::size_t>>(0)) {
    const nn::Shape out = network_.output_shape();
    if (kind_ == TaskKind::classification) {
        if (class_count_ < 2) throw InvalidArgument("a classifier needs at least two classes");
        if (out.size() != static_cast<std::size_t>(class_count_))
            throw InvalidArgument("classifier output size does not match class count");
    } else {
        class_count_ = 0;
        if (out != network_.input_shape())
            throw InvalidArgument("reconstructor output shape must equal its input shape");
    }
}

Image TaskModel::to_model_input(const Image& image) const {
    const nn::Shape in = network_.input_shape();
    return adapt_channels(resize_bilinear(image, in.height, in.width), in.channels);
}

Image TaskModel::from_model_grad(const Image& grad, const Image& image) const {
    Image g = adapt_channels_adjoint(grad, image.channels());
    return resize_bilinear_adjoint(g, image.height(), image.width());
}

Image TaskModel::forward(const Image& image) const {
    evaluations_->fetch_add(1);
    return network_.forward(to_model_input(image));
}

double TaskModel::loss(const Image& image, const Target& target, Image* grad_image) const {
    const bool wants_class = std::holds_alternative<int>(target);
    if (wants_class != (kind_ == TaskKind::classification))
        throw InvalidArgument("target kind does not match a " + to_string(kind_) + " model");
    evaluations_->fetch_add(1);
    const Image input = to_model_input(image);
    nn::Network::Trace trace;
    const Image out = grad_image ? network_.forward(input, trace) : network_.forward(input);
    Image grad_out;
    double value = 0.0;
    if (wants_class) {
        value = nn::softmax_cross_entropy(out, std::get<int>(target), grad_image ? &grad_out : nullptr);
    } else {
        const Image& ref = std::get<Image>(target);
        if (ref.height() != image.height() || ref.width() != image.width())
            throw InvalidArgument("reconstruction target shape does not match the image");
        value = nn::mean_squared_error(out, to_model_input(ref), grad_image ? &grad_out : nullptr);
    }
    if (grad_image != nullptr) *grad_image = from_model_grad(network_.backward(trace, grad_out, {}), image);
    return value;
}

int TaskModel::predict_class(const Image& image) const {
    if (kind_ != TaskKind::classification) throw InvalidArgument("not a classification model");
    const Image logits = forward(image);
    auto v = logits.values();
    return static_cast<int>(std::ranges::max_element(v) - v.begin());
}

nlohmann::json TaskModel::to_json() const {
    return {{"format", "neva-task-model"},
            {"version", 1},
            {"kind", to_string(kind_)},
            {"class_count", class_count_},
            {"network", network_.to_json()}};
}

TaskModel TaskModel::from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "neva-task-model") throw InvalidArgument("not a task model checkpoint");
    return TaskModel(task_kind_from_string(j.at("kind").get<std::string>()),
                     nn::Network::from_json(j.at("network")), j.value("class_count", 0));
}

void TaskModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_json().dump() << '\n';
}

TaskModel TaskModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    return from_json(nlohmann::json::parse(in));
}

void TaskTrainConfig::validate() const {
    if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
    if (batch_size < 1) throw InvalidArgument("batch_size must be at least 1");
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
    if (!(noise_std >= 0.0)) throw InvalidArgument("noise_std must be non-negative");
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
        throw InvalidArgument("holdout_fraction must lie in [0,1)");
}

std::vector<nn::LayerSpec> default_classifier_layers(int class_count) {
    using nn::LayerSpec;
    return {LayerSpec::conv(8), LayerSpec::relu(), LayerSpec::avgpool(),
            LayerSpec::conv(16), LayerSpec::relu(), LayerSpec::avgpool(),
            LayerSpec::conv(16), LayerSpec::relu(), LayerSpec::avgpool(),
            LayerSpec::dense(32), LayerSpec::relu(), LayerSpec::dense(class_count)};
}

std::vector<nn::LayerSpec> default_reconstructor_layers(int channels) {
    using nn::LayerSpec;
    return {LayerSpec::conv(16), LayerSpec::relu(), LayerSpec::avgpool(),
            LayerSpec::conv(16), LayerSpec::relu(), LayerSpec::upsample(),
            LayerSpec::conv(16), LayerSpec::relu(), LayerSpec::conv(channels), LayerSpec::sigmoid()};
}

namespace {

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> holdout;
};

Split split_indices(std::size_t n, double holdout_fraction, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_hold = static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(n)));
    if (n_hold >= n) n_hold = n - 1;
    Split s;
    s.holdout.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_hold));
    s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_hold), idx.end());
    return s;
}

// Runs minibatch Adam over `order` for cfg.epochs epochs; sample_grad adds one
// sample's parameter gradient into its buffer and returns that sample's loss.
template <class SampleGrad>
void fit(nn::Network& net, std::vector<std::size_t> order, const TaskTrainConfig& cfg, std::mt19937_64& rng,
         SampleGrad&& sample_grad, TaskTrainLog* log) {
    nn::Adam adam(net.parameter_count(), {cfg.learning_rate});
    std::vector<double> grad(net.parameter_count());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::ranges::fill(grad, 0.0);
            for (std::size_t i = start; i < stop; ++i) total += sample_grad(order[i], grad);
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (double& g : grad) g *= inv;
            adam.step(net.parameters(), grad);
        }
        if (log != nullptr) log->epoch_loss.push_back(total / static_cast<double>(order.size()));
    }
}

void check_shapes(const std::vector<Image>& images) {
    for (const Image& im : images) {
        validate_stimulus(im);
        if (!im.same_shape(images.front())) throw InvalidArgument("training images have inconsistent shapes");
    }
}

}  // namespace

TaskModel train_classifier(const std::vector<LabeledStimulus>& train_set, const TaskTrainConfig& cfg,
                           TaskTrainLog* log) {
    cfg.validate();
    if (train_set.empty()) throw InvalidArgument("empty training set");
    std::vector<Image> images;
    std::vector<int> labels;
    std::set<int> classes;
    for (const auto& item : train_set) {
        if (!std::holds_alternative<int>(item.target)) throw InvalidArgument("classifier needs class labels");
        const int label = std::get<int>(item.target);
        if (label < 0) throw InvalidArgument("negative class label");
        images.push_back(item.stimulus);
        labels.push_back(label);
        classes.insert(label);
    }
    check_shapes(images);
    if (classes.size() < 2) throw InvalidArgument("degenerate label set: need at least two classes");
    const int class_count = *classes.rbegin() + 1;

    const Image& first = images.front();
    const nn::Shape shape{first.channels(), first.height(), first.width()};
    const auto layers = cfg.architecture.is_null() ? default_classifier_layers(class_count)
                                                   : nn::layers_from_json(cfg.architecture);
    std::mt19937_64 rng(cfg.seed);
    nn::Network net(shape, layers, rng());
    if (net.output_shape().size() != static_cast<std::size_t>(class_count))
        throw InvalidArgument("architecture output size does not match the class count");

    const Split split = split_indices(images.size(), cfg.holdout_fraction, rng);
    fit(net, split.train, cfg, rng,
        [&](std::size_t i, std::vector<double>& grad) {
            nn::Network::Trace trace;
            const Image logits = net.forward(images[i], trace);
            Image g;
            const double loss = nn::softmax_cross_entropy(logits, labels[i], &g);
            net.backward(trace, g, grad);
            return loss;
        },
        log);

    TaskModel model(TaskKind::classification, std::move(net), class_count);
    if (log != nullptr && !split.holdout.empty()) {
        double loss = 0.0;
        int correct = 0;
        for (std::size_t i : split.holdout) {
            loss += model.loss(images[i], labels[i]);
            correct += model.predict_class(images[i]) == labels[i] ? 1 : 0;
        }
        log->holdout_loss = loss / static_cast<double>(split.holdout.size());
        log->holdout_accuracy = correct / static_cast<double>(split.holdout.size());
    }
    return model;
}

TaskModel train_reconstructor(const std::vector<Image>& train_set, const TaskTrainConfig& cfg,
                              TaskTrainLog* log) {
    cfg.validate();
    if (train_set.empty()) throw InvalidArgument("empty training set");
    check_shapes(train_set);
    const Image& first = train_set.front();
    const nn::Shape shape{first.channels(), first.height(), first.width()};
    const auto layers = cfg.architecture.is_null() ? default_reconstructor_layers(first.channels())
                                                   : nn::layers_from_json(cfg.architecture);
    std::mt19937_64 rng(cfg.seed);
    nn::Network net(shape, layers, rng());
    if (net.output_shape() != shape) throw InvalidArgument("reconstructor must map its input shape onto itself");

    const Split split = split_indices(train_set.size(), cfg.holdout_fraction, rng);
    std::normal_distribution<double> noise(0.0, 1.0);
    fit(net, split.train, cfg, rng,
        [&](std::size_t i, std::vector<double>& grad) {
            Image noisy = train_set[i];
            for (double& v : noisy.values()) v = std::clamp(v + cfg.noise_std * noise(rng), 0.0, 1.0);
            nn::Network::Trace trace;
            const Image out = net.forward(noisy, trace);
            Image g;
            const double loss = nn::mean_squared_error(out, train_set[i], &g);
            net.backward(trace, g, grad);
            return loss;
        },
        log);

    TaskModel model(TaskKind::reconstruction, std::move(net), 0);
    if (log != nullptr && !split.holdout.empty()) {
        double loss = 0.0;
        for (std::size_t i : split.holdout) loss += model.loss(train_set[i], train_set[i]);
        log->holdout_loss = loss / static_cast<double>(split.holdout.size());
    }
    return model;
}

double task_loss(const TaskModel& model, const Image& image, const Target& target, Image* grad_image) {
    return model.loss(image, target, grad_image);
}

double classification_accuracy(const TaskModel& model, const std::vector<LabeledStimulus>& samples) {
    if (samples.empty()) return 0.0;
    int correct = 0;
    for (const auto& s : samples) correct += model.predict_class(s.stimulus) == std::get<int>(s.target) ? 1 : 0;
    return correct / static_cast<double>(samples.size());
}

}  // namespace neva::tasks
