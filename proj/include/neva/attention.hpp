#pragma once

// The attention mechanism: a convolutional regressor from the currently
// perceived image to the next fixation. It is trained only through the task
// loss, back-propagated through the differentiable foveation layer; at
// inference it is iterated on its own perceptual state and no task model is
// involved.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "neva/foveation.hpp"
#include "neva/nn.hpp"
#include "neva/tasks.hpp"

namespace neva::attention {

struct NevaTrainConfig {
    int horizon = 5;       // fixations per training rollout
    int unroll_depth = 1;  // how many steps back each step's loss reaches
    foveation::FoveationConfig foveation;
    int epochs = 10;
    int batch_size = 16;
    double learning_rate = 3e-3;
    std::uint64_t seed = 1;

    void validate() const;
};

class AttentionModel {
  public:
    explicit AttentionModel(nn::Network network);

    const nn::Network& network() const noexcept { return network_; }
    nn::Network& network() noexcept { return network_; }
    nn::Shape input_shape() const noexcept { return network_.input_shape(); }

    // Next fixation for a perceived image of exactly input_shape().
    Fixation next_fixation(const Image& perceived) const;

    struct Step {
        nn::Network::Trace trace;
        Fixation fixation;
    };
    Step traced_step(const Image& perceived) const;

    // Accumulates parameter gradients for d loss / d fixation and returns
    // d loss / d perceived.
    Image backward(const Step& step, foveation::FixationGradient grad, std::span<double> param_grad) const;

    nlohmann::json to_json() const;
    static AttentionModel from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static AttentionModel load(const std::filesystem::path& path);

  private:
    nn::Network network_;
};

std::vector<nn::LayerSpec> default_attention_layers();

AttentionModel make_attention_model(nn::Shape input, std::uint64_t seed,
                                    const nlohmann::json& architecture = nullptr);

// Brings a perceived image of any size to the model's input: bilinear resize,
// channel adaptation, then per-channel mean removal. from_attention_grad is
// the adjoint.
Image to_attention_input(const AttentionModel& model, const Image& perceived);
Image from_attention_grad(const Image& grad, const Image& perceived);

// Per-step loss on a perceived image for training sample `index`; writes
// d loss / d perceived into grad.
using StepLoss = std::function<double(const Image& perceived, std::size_t index, Image* grad)>;

struct AttentionTrainLog {
    std::vector<double> epoch_loss;  // mean per-step loss of each epoch
};

// Runs one training rollout of cfg.horizon fixations on a stimulus and its
// coarse copy, accumulating the truncated-BPTT parameter gradient of the
// summed step losses into grad. Returns the summed loss.
double rollout_gradient(const AttentionModel& model, std::shared_ptr<const Image> sharp,
                        std::shared_ptr<const Image> coarse, const StepLoss& loss, std::size_t index,
                        const NevaTrainConfig& cfg, std::span<double> grad);

AttentionModel train_attention(AttentionModel model, const std::vector<Image>& stimuli, const StepLoss& loss,
                               const NevaTrainConfig& cfg, AttentionTrainLog* log = nullptr);

// Trains against a frozen task model; targets must match the task kind.
AttentionModel train_attention(AttentionModel model, const tasks::TaskModel& task,
                               const std::vector<tasks::LabeledStimulus>& train_set, const NevaTrainConfig& cfg,
                               AttentionTrainLog* log = nullptr);

// Iterates the attention model on its own perceptual state for T steps,
// starting from the fully coarse view.
Scanpath generate_scanpath(const AttentionModel& model, const Image& s, int length,
                           const foveation::FoveationConfig& cfg);

}  // namespace neva::attention
