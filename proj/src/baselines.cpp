#include "neva/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "neva/foveation.hpp"

namespace neva::baselines {

namespace {

void check_length(int length) {
    if (length < 1) throw InvalidArgument("scanpath length must be at least 1");
}

// blur_stimulus without the [0,1] range restriction on its input.
Image smooth(const Image& im, double sigma) { return foveation::blur_stimulus(im, sigma); }

}  // namespace

Scanpath random_scanpath(int height, int width, int length, std::uint64_t seed) {
    check_length(length);
    if (height < 1 || width < 1) throw InvalidArgument("image size must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Scanpath sp;
    for (int t = 0; t < length; ++t) {
        const double x = unit(rng);
        const double y = unit(rng);
        sp.fixations.push_back({x, y});
    }
    return sp;
}

Scanpath center_scanpath(int height, int width, int length, double sigma_center, std::uint64_t seed) {
    check_length(length);
    if (height < 1 || width < 1) throw InvalidArgument("image size must be positive");
    if (!(sigma_center > 0.0) || !std::isfinite(sigma_center)) throw InvalidArgument("sigma_center must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma_center);
    Scanpath sp;
    while (static_cast<int>(sp.size()) < length) {
        const double x = 0.5 + gauss(rng);
        const double y = 0.5 + gauss(rng);
        if (x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0) sp.fixations.push_back({x, y});
    }
    return sp;
}

SaliencyMap saliency_itti_lite(const Image& s, const IttiLiteConfig& cfg) {
    validate_stimulus(s);
    const int h = s.height();
    const int w = s.width();
    Image total(h, w, 1);
    auto acc = total.plane(0);

    for (int c = 0; c < s.channels(); ++c) {
        Image channel(h, w, 1);
        std::ranges::copy(s.plane(c), channel.plane(0).begin());
        const std::pair<double, double> scales[] = {{cfg.center_small, cfg.surround_small},
                                                    {cfg.center_large, cfg.surround_large}};
        for (const auto& [center, surround] : scales) {
            const Image a = smooth(channel, center);
            const Image b = smooth(channel, surround);
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += std::abs(a.data()[i] - b.data()[i]);
        }
    }

    Image intensity(h, w, 1);
    Image squared(h, w, 1);
    for (int c = 0; c < s.channels(); ++c) {
        auto p = s.plane(c);
        for (std::size_t i = 0; i < p.size(); ++i) intensity.data()[i] += p[i] / s.channels();
    }
    for (std::size_t i = 0; i < squared.size(); ++i) squared.data()[i] = intensity.data()[i] * intensity.data()[i];
    const Image mean = smooth(intensity, cfg.contrast_window);
    const Image mean_sq = smooth(squared, cfg.contrast_window);
    for (std::size_t i = 0; i < acc.size(); ++i)
        acc[i] += std::sqrt(std::max(0.0, mean_sq.data()[i] - mean.data()[i] * mean.data()[i]));

    const double peak = *std::ranges::max_element(acc);
    // Numerical residue on flat images is not contrast.
    if (peak <= 1e-6) {
        std::ranges::fill(acc, 0.0);
    } else {
        for (double& v : acc) v = v / peak;
    }
    return {std::move(total)};
}

WtaResult wta_scanpath(const SaliencyMap& sal, int length, double ior_radius) {
    check_length(length);
    if (!(ior_radius > 0.0)) throw InvalidArgument("ior_radius must be positive");
    const Image& map = sal.values;
    if (map.channels() != 1 || map.empty()) throw InvalidArgument("saliency map must be a non-empty single plane");
    const int h = map.height();
    const int w = map.width();

    WtaResult result;
    const double peak = *std::ranges::max_element(map.values());
    if (!(peak > 0.0)) {
        result.degenerate = true;
        result.scanpath.fixations.assign(static_cast<std::size_t>(length), Fixation{0.5, 0.5});
        return result;
    }

    const double longer = std::max(h, w);
    const double sx = w / longer;
    const double sy = h / longer;
    Image working = map;
    for (int t = 0; t < length; ++t) {
        int by = 0, bx = 0;
        double best = -1.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (working.at(y, x) > best) {
                    best = working.at(y, x);
                    by = y;
                    bx = x;
                }
        if (!(best > 0.0)) {
            working = map;
            ++result.inhibition_resets;
            --t;
            continue;
        }
        const Fixation f{pixel_center(bx, w), pixel_center(by, h)};
        result.scanpath.fixations.push_back(f);
        for (int y = 0; y < h; ++y) {
            const double dy = (pixel_center(y, h) - f.y) * sy;
            for (int x = 0; x < w; ++x) {
                const double dx = (pixel_center(x, w) - f.x) * sx;
                if (dx * dx + dy * dy <= ior_radius * ior_radius) working.at(y, x) = 0.0;
            }
        }
    }
    return result;
}

}  // namespace neva::baselines
