#pragma once

// Downstream task models. Their only job inside the attention loop is to turn
// a perceived image into a differentiable loss: a classifier scored by
// cross-entropy, or a denoising autoencoder scored by reconstruction error
// against the sharp original.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "neva/image.hpp"
#include "neva/nn.hpp"

namespace neva::tasks {

enum class TaskKind { classification, reconstruction };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& name);

// Class index or reconstruction target image.
using Target = std::variant<int, Image>;

struct LabeledStimulus {
    Image stimulus;
    Target target;
};

class TaskModel {
  public:
    TaskModel(TaskKind kind, nn::Network network, int class_count);

    TaskKind kind() const noexcept { return kind_; }
    int class_count() const noexcept { return class_count_; }
    const nn::Network& network() const noexcept { return network_; }
    nn::Shape input_shape() const noexcept { return network_.input_shape(); }

    // Logits (classification) or reconstructed image at model resolution.
    // Stimuli of another size or channel count are bilinearly resized and
    // channel-adapted first.
    Image forward(const Image& image) const;

    // Task loss of `image` against `target`. When grad_image is non-null it
    // receives d loss / d image at the image's own resolution.
    double loss(const Image& image, const Target& target, Image* grad_image = nullptr) const;

    int predict_class(const Image& image) const;

    // Number of forward evaluations made through this model (and its copies).
    std::size_t evaluation_count() const noexcept { return evaluations_->load(); }

    nlohmann::json to_json() const;
    static TaskModel from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static TaskModel load(const std::filesystem::path& path);

  private:
    Image to_model_input(const Image& image) const;
    Image from_model_grad(const Image& grad, const Image& image) const;

    TaskKind kind_;
    nn::Network network_;
    int class_count_ = 0;
    std::shared_ptr<std::atomic<std::size_t>> evaluations_;
};

struct TaskTrainConfig {
    int epochs = 30;
    int batch_size = 16;
    double learning_rate = 2e-3;
    std::uint64_t seed = 1;
    double noise_std = 0.1;         // denoising corruption, pixel units
    double holdout_fraction = 0.2;  // share of the data kept out of training
    nlohmann::json architecture;    // null selects the default for the task

    void validate() const;
};

struct TaskTrainLog {
    std::vector<double> epoch_loss;
    double holdout_loss = 0.0;
    double holdout_accuracy = 0.0;  // classification only
};

std::vector<nn::LayerSpec> default_classifier_layers(int class_count);
std::vector<nn::LayerSpec> default_reconstructor_layers(int channels);

TaskModel train_classifier(const std::vector<LabeledStimulus>& train_set, const TaskTrainConfig& cfg,
                           TaskTrainLog* log = nullptr);

TaskModel train_reconstructor(const std::vector<Image>& train_set, const TaskTrainConfig& cfg,
                              TaskTrainLog* log = nullptr);

double task_loss(const TaskModel& model, const Image& image, const Target& target,
                 Image* grad_image = nullptr);

double classification_accuracy(const TaskModel& model, const std::vector<LabeledStimulus>& samples);

}  // namespace neva::tasks
