#include "neva/plot.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgproc.hpp>

#include "neva/data.hpp"

namespace neva::plot {

namespace {

constexpr int kMinHeatmapSide = 256;

}  // namespace

Panels render_panels(const Image& stimulus, const Scanpath& scanpath, const foveation::FoveationConfig& cfg) {
    const foveation::PerceptualState state = foveation::rollout(stimulus, scanpath.fixations, cfg);
    Panels panels{stimulus, {}, state.perceived(), state.mask()};

    const int h = stimulus.height();
    const int w = stimulus.width();
    const int scale = std::max(1, (kMinHeatmapSide + std::max(h, w) - 1) / std::max(h, w));

    cv::Mat gray(h, w, CV_8UC1), heat(h, w, CV_8UC1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double lum = 0.0;
            for (int c = 0; c < stimulus.channels(); ++c) lum += stimulus.at(y, x, c) / stimulus.channels();
            gray.at<unsigned char>(y, x) = static_cast<unsigned char>(std::lround(lum * 255.0));
            heat.at<unsigned char>(y, x) = static_cast<unsigned char>(std::lround(state.mask().at(y, x) * 255.0));
        }
    cv::Mat gray_big, heat_big, gray_bgr, heat_bgr, canvas;
    cv::resize(gray, gray_big, {w * scale, h * scale}, 0, 0, cv::INTER_NEAREST);
    cv::resize(heat, heat_big, {w * scale, h * scale}, 0, 0, cv::INTER_LINEAR);
    cv::cvtColor(gray_big, gray_bgr, cv::COLOR_GRAY2BGR);
    cv::applyColorMap(heat_big, heat_bgr, cv::COLORMAP_JET);
    cv::addWeighted(gray_bgr, 0.45, heat_bgr, 0.55, 0.0, canvas);

    std::vector<cv::Point> points;
    for (const Fixation& f : scanpath.fixations)
        points.emplace_back(static_cast<int>(std::lround(f.x * w * scale)), static_cast<int>(std::lround(f.y * h * scale)));
    if (points.size() > 1) cv::polylines(canvas, points, false, {255, 255, 255}, 1, cv::LINE_AA);
    const double font = std::max(0.35, 0.0016 * w * scale);
    for (std::size_t i = 0; i < points.size(); ++i) {
        cv::circle(canvas, points[i], std::max(3, scale), {255, 255, 255}, -1, cv::LINE_AA);
        cv::putText(canvas, std::to_string(i + 1), points[i] + cv::Point(4, -4), cv::FONT_HERSHEY_SIMPLEX, font,
                    {0, 0, 0}, 2, cv::LINE_AA);
        cv::putText(canvas, std::to_string(i + 1), points[i] + cv::Point(4, -4), cv::FONT_HERSHEY_SIMPLEX, font,
                    {255, 255, 255}, 1, cv::LINE_AA);
    }

    Image heatmap(canvas.rows, canvas.cols, 3);
    for (int y = 0; y < canvas.rows; ++y)
        for (int x = 0; x < canvas.cols; ++x) {
            const auto& px = canvas.at<cv::Vec3b>(y, x);
            for (int c = 0; c < 3; ++c) heatmap.at(y, x, c) = px[2 - c] / 255.0;
        }
    panels.heatmap = std::move(heatmap);
    return panels;
}

std::vector<std::filesystem::path> write_panels(const Panels& panels, const std::filesystem::path& dir,
                                                const std::string& stem) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> out{dir / (stem + "_stimulus.png"), dir / (stem + "_heatmap.png"),
                                           dir / (stem + "_perceived.png")};
    data::save_image(out[0], panels.stimulus);
    data::save_image(out[1], panels.heatmap);
    data::save_image(out[2], panels.perceived);
    return out;
}

}  // namespace neva::plot
