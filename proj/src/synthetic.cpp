#include "neva/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "neva/foveation.hpp"

namespace neva::data {

void SyntheticConfig::validate() const {
    if (size < 16 || size % 2 != 0) throw InvalidArgument("synthetic image size must be even and >= 16");
    if (channels != 1 && channels != 3) throw InvalidArgument("synthetic images have 1 or 3 channels");
    if (!(min_half_extent > 0.0 && min_half_extent <= max_half_extent))
        throw InvalidArgument("invalid synthetic shape extent range");
    if (max_half_extent + center_jitter > 0.5)
        throw InvalidArgument("synthetic shapes would leave their quadrant");
}

int quadrant_of(Fixation f) noexcept { return (f.y >= 0.5 ? 2 : 0) + (f.x >= 0.5 ? 1 : 0); }

namespace {

bool inside_shape(ShapeClass shape, double dx, double dy, double half) {
    switch (shape) {
        case ShapeClass::disk: return dx * dx + dy * dy <= half * half;
        case ShapeClass::square: return std::abs(dx) <= 0.85 * half && std::abs(dy) <= 0.85 * half;
        case ShapeClass::cross:
            return (std::abs(dx) <= 0.35 * half && std::abs(dy) <= half) ||
                   (std::abs(dy) <= 0.35 * half && std::abs(dx) <= half);
    }
    return false;
}

}  // namespace

std::vector<SyntheticSample> make_synthetic_dataset(int n, std::uint64_t seed, const SyntheticConfig& cfg) {
    if (n < 1) throw InvalidArgument("dataset size must be at least 1");
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> pick_class(0, kShapeClassCount - 1);
    std::uniform_int_distribution<int> pick_quadrant(0, 3);

    const int size = cfg.size;
    const double quad = size / 2.0;
    std::vector<SyntheticSample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        SyntheticSample sample;
        char id[32];
        std::snprintf(id, sizeof id, "syn_%05d", k);
        sample.id = id;
        const auto shape = static_cast<ShapeClass>(pick_class(rng));
        sample.quadrant = pick_quadrant(rng);

        // Textured background: white noise smoothed over about one pixel.
        Image noise(size, size, cfg.channels);
        const double base = 0.35 + 0.3 * unit(rng);
        for (double& v : noise.values()) v = std::clamp(base + 0.5 * (unit(rng) - 0.5), 0.0, 1.0);
        Image image = foveation::blur_stimulus(noise, 0.7 / size);

        const double half = quad * (cfg.min_half_extent + (cfg.max_half_extent - cfg.min_half_extent) * unit(rng));
        const double qx = (sample.quadrant % 2) * quad;
        const double qy = (sample.quadrant / 2) * quad;
        const double cx = qx + quad / 2.0 + quad * cfg.center_jitter * (2.0 * unit(rng) - 1.0);
        const double cy = qy + quad / 2.0 + quad * cfg.center_jitter * (2.0 * unit(rng) - 1.0);

        // Saturated colour whose brightness is unrelated to the class.
        std::vector<double> colour(static_cast<std::size_t>(cfg.channels));
        const bool bright = unit(rng) < 0.5;
        for (double& c : colour) {
            const bool hi = cfg.channels == 1 ? bright : unit(rng) < 0.5;
            c = hi ? 0.8 + 0.15 * unit(rng) : 0.05 + 0.15 * unit(rng);
        }
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                if (!inside_shape(shape, x + 0.5 - cx, y + 0.5 - cy, half)) continue;
                for (int c = 0; c < cfg.channels; ++c) image.at(y, x, c) = colour[static_cast<std::size_t>(c)];
            }

        sample.item = {std::move(image), static_cast<int>(shape)};
        sample.object_center = {cx / size, cy / size};
        sample.object_radius = half / size;
        out.push_back(std::move(sample));
    }
    return out;
}

std::vector<tasks::LabeledStimulus> labeled_items(const std::vector<SyntheticSample>& samples) {
    std::vector<tasks::LabeledStimulus> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.item);
    return out;
}

std::vector<Image> stimuli(const std::vector<SyntheticSample>& samples) {
    std::vector<Image> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.item.stimulus);
    return out;
}

std::vector<Scanpath> oracle_human_scanpaths(const SyntheticSample& sample, const OracleHumanConfig& cfg,
                                             std::uint64_t seed) {
    if (cfg.subjects < 1 || cfg.length < 1) throw InvalidArgument("oracle needs subjects and length >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto clamp01 = [](Fixation f) { return Fixation{std::clamp(f.x, 0.0, 1.0), std::clamp(f.y, 0.0, 1.0)}; };

    const Fixation target = sample.object_center;
    std::vector<Scanpath> out;
    for (int s = 0; s < cfg.subjects; ++s) {
        Scanpath path;
        path.stimulus_id = sample.id;
        Fixation cur = clamp01({0.5 + cfg.start_jitter * gauss(rng), 0.5 + cfg.start_jitter * gauss(rng)});
        path.fixations.push_back(cur);
        bool arrived = false;
        while (static_cast<int>(path.size()) < cfg.length) {
            if (!arrived) {
                const double dx = target.x - cur.x;
                const double dy = target.y - cur.y;
                const double dist = std::hypot(dx, dy);
                const double step = cfg.saccade_min + (cfg.saccade_max - cfg.saccade_min) * unit(rng);
                if (dist <= step) {
                    arrived = true;
                } else {
                    cur = clamp01({cur.x + dx / dist * step, cur.y + dy / dist * step});
                    path.fixations.push_back(cur);
                    continue;
                }
            }
            cur = clamp01({target.x + cfg.dwell_jitter * gauss(rng), target.y + cfg.dwell_jitter * gauss(rng)});
            path.fixations.push_back(cur);
        }
        out.push_back(std::move(path));
    }
    return out;
}

}  // namespace neva::data
