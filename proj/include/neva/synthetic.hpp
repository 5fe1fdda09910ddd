#pragma once

// Desk-scale stand-in data: small textured images with one shape (disk,
// square or cross) in a random quadrant, plus "oracle human" scanpaths that
// travel from the image center to the object and dwell on it.

#include <cstdint>
#include <string>
#include <vector>

#include "neva/image.hpp"
#include "neva/tasks.hpp"

namespace neva::data {

enum class ShapeClass : int { disk = 0, square = 1, cross = 2 };
inline constexpr int kShapeClassCount = 3;

struct SyntheticConfig {
    int size = 32;
    int channels = 3;
    double min_half_extent = 0.25;  // shape half-size, fraction of the quadrant side
    double max_half_extent = 0.34;
    double center_jitter = 0.09;    // object center offset, fraction of the quadrant side

    void validate() const;
};

struct SyntheticSample {
    std::string id;
    tasks::LabeledStimulus item;
    int quadrant = 0;        // 0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right
    Fixation object_center;  // normalized
    double object_radius = 0.0;  // normalized half extent
};

// Quadrant index containing a normalized point.
int quadrant_of(Fixation f) noexcept;

std::vector<SyntheticSample> make_synthetic_dataset(int n, std::uint64_t seed,
                                                    const SyntheticConfig& cfg = {});

std::vector<tasks::LabeledStimulus> labeled_items(const std::vector<SyntheticSample>& samples);
std::vector<Image> stimuli(const std::vector<SyntheticSample>& samples);

struct OracleHumanConfig {
    int subjects = 8;
    int length = 10;
    double saccade_min = 0.12;
    double saccade_max = 0.2;
    double start_jitter = 0.03;
    double dwell_jitter = 0.04;  // spread of fixations on the object, normalized
};

// Shortest-path exploration: from near the image center, straight saccades
// towards the object until it is reached, then jittered fixations on it.
std::vector<Scanpath> oracle_human_scanpaths(const SyntheticSample& sample, const OracleHumanConfig& cfg,
                                             std::uint64_t seed);

}  // namespace neva::data
