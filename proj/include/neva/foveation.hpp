#pragma once

// Differentiable foveated vision. A stimulus is seen sharply where a Gaussian
// blob centered on the fixation is close to 1 and through a low-pass copy
// elsewhere. The perceptual memory accumulates discounted blobs over a
// sequence of fixations, so once-fixated regions stay (partially) sharp.

#include <memory>
#include <span>

#include "neva/image.hpp"

namespace neva::foveation {

struct FoveationConfig {
    double sigma_fovea = 0.1;  // blob std, fraction of the longer image side
    double sigma_blur = 0.05;  // low-pass std, fraction of the longer image side
    double gamma = 0.3;        // forgetting coefficient

    void validate() const;
};

struct FixationGradient {
    double dx = 0.0;
    double dy = 0.0;
};

// Low-pass copy of `s`: per-channel separable Gaussian, kernel truncated at
// 3 sigma, reflect-101 borders.
Image blur_stimulus(const Image& s, double sigma_blur);

// Unnormalized Gaussian exp(-d^2 / (2 sigma^2)) sampled at pixel centers.
// Distances are measured in units of the longer image side so the blob is
// round on non-square images.
Image gaussian_blob(int height, int width, Fixation xi, double sigma_fovea);

// Vector-Jacobian product of gaussian_blob with respect to the fixation.
FixationGradient gaussian_blob_vjp(int height, int width, Fixation xi, double sigma_fovea,
                                   const Image& grad_blob);

// Single-step foveated rendering: blob * s + (1 - blob) * coarse.
Image foveate(const Image& s, const Image& coarse, Fixation xi, const FoveationConfig& cfg);

FixationGradient foveate_vjp(const Image& s, const Image& coarse, Fixation xi,
                             const FoveationConfig& cfg, const Image& grad_out);

// Per-stimulus perceptual memory. Immutable: update_state returns a new
// state. The sharp and coarse images are shared between successive states.
class PerceptualState {
  public:
    const Image& stimulus() const noexcept { return *stimulus_; }
    const Image& coarse() const noexcept { return *coarse_; }
    // Unclipped discounted sum of all blobs seen so far.
    const Image& accumulator() const noexcept { return accumulator_; }
    // accumulator clipped to [0,1].
    const Image& mask() const noexcept { return mask_; }
    const Image& perceived() const noexcept { return perceived_; }
    int step() const noexcept { return step_; }
    const FoveationConfig& config() const noexcept { return config_; }

  private:
    friend PerceptualState init_state(const Image&, const FoveationConfig&);
    friend PerceptualState init_state(std::shared_ptr<const Image>, std::shared_ptr<const Image>,
                                      const FoveationConfig&);
    friend PerceptualState update_state(const PerceptualState&, Fixation);

    std::shared_ptr<const Image> stimulus_;
    std::shared_ptr<const Image> coarse_;
    Image accumulator_;
    Image mask_;
    Image perceived_;
    int step_ = 0;
    FoveationConfig config_;
};

// Fresh state: empty memory, the agent perceives only the coarse image.
PerceptualState init_state(const Image& s, const FoveationConfig& cfg);

// Same, reusing an already computed coarse image (must equal
// blur_stimulus(*s, cfg.sigma_blur) for the state to be meaningful).
PerceptualState init_state(std::shared_ptr<const Image> s, std::shared_ptr<const Image> coarse,
                           const FoveationConfig& cfg);

// accumulator' = gamma * accumulator + blob(xi); mask' = clip(accumulator', 0, 1).
PerceptualState update_state(const PerceptualState& state, Fixation xi);

// Applies the fixations in order, starting from init_state(s, cfg).
PerceptualState rollout(const Image& s, std::span<const Fixation> fixations, const FoveationConfig& cfg);

// Gradient of a loss with respect to the accumulator of `state`, given the
// gradient with respect to its perceived image. Zero where the mask is
// saturated.
Image accumulator_grad(const PerceptualState& state, const Image& grad_perceived);

}  // namespace neva::foveation
