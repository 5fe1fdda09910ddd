#pragma once

// Reference scanpath generators: uniform random fixations, a center-biased
// Gaussian, and winner-take-all with inhibition of return over a simplified
// center-surround saliency map.

#include <cstdint>

#include "neva/image.hpp"

namespace neva::baselines {

// Single-channel map, non-negative, max-normalized to 1 unless all zero.
struct SaliencyMap {
    Image values;
};

Scanpath random_scanpath(int height, int width, int length, std::uint64_t seed);

// Fixations i.i.d. from N((0.5,0.5), sigma_center^2 I) truncated to the unit
// square by rejection.
Scanpath center_scanpath(int height, int width, int length, double sigma_center, std::uint64_t seed);

struct IttiLiteConfig {
    double center_small = 0.02;  // center / surround scales, fraction of the longer side
    double surround_small = 0.08;
    double center_large = 0.04;
    double surround_large = 0.16;
    double contrast_window = 0.05;  // local intensity std-dev window
};

// Rectified per-channel difference-of-Gaussians at two scales plus local
// intensity contrast, summed and max-normalized.
SaliencyMap saliency_itti_lite(const Image& s, const IttiLiteConfig& cfg = {});

struct WtaResult {
    Scanpath scanpath;
    bool degenerate = false;  // the map was identically zero; fixations sit at the center
    int inhibition_resets = 0;  // times the whole map was suppressed and restored
};

// Repeatedly fixates the argmax (row-major first on ties) and zeroes a disk
// of radius ior_radius around it. Distances use longer-side units.
WtaResult wta_scanpath(const SaliencyMap& sal, int length, double ior_radius);

}  // namespace neva::baselines
