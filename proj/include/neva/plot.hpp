#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "neva/foveation.hpp"
#include "neva/image.hpp"

namespace neva::plot {

// Three views of one exploration: the stimulus, the memory mask after the
// last fixation as a heatmap with numbered fixations, and the final
// perceived image.
struct Panels {
    Image stimulus;
    Image heatmap;    // RGB, upscaled for legibility
    Image perceived;  // exactly the perceptual state's perceived image
    Image mask;       // the memory mask the heatmap is drawn from
};

Panels render_panels(const Image& stimulus, const Scanpath& scanpath, const foveation::FoveationConfig& cfg);

// Writes <stem>_stimulus.png, <stem>_heatmap.png, <stem>_perceived.png.
std::vector<std::filesystem::path> write_panels(const Panels& panels, const std::filesystem::path& dir,
                                                const std::string& stem);

}  // namespace neva::plot
