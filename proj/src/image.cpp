#include "neva/image.hpp"

#include <algorithm>
#include <cmath>

namespace neva {

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
    if (height < 0 || width < 0 || channels < 0)
        throw InvalidArgument("image dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

bool in_unit_square(const Fixation& f) noexcept {
    return f.x >= 0.0 && f.x <= 1.0 && f.y >= 0.0 && f.y <= 1.0;
}

void validate_stimulus(const Image& s) {
    if (s.height() < 8 || s.width() < 8)
        throw InvalidArgument("stimulus must be at least 8x8 pixels");
    if (s.channels() != 1 && s.channels() != 3)
        throw InvalidArgument("stimulus must have 1 or 3 channels");
    for (double v : s.values()) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw InvalidArgument("stimulus values must be finite and within [0,1]");
    }
}

namespace {

struct Tap {
    int i0, i1;
    double w0, w1;
};

// Source taps for each destination index along one axis.
std::vector<Tap> bilinear_taps(int src, int dst) {
    std::vector<Tap> taps(static_cast<std::size_t>(dst));
    const double scale = static_cast<double>(src) / dst;
    for (int d = 0; d < dst; ++d) {
        double pos = (d + 0.5) * scale - 0.5;
        pos = std::clamp(pos, 0.0, static_cast<double>(src - 1));
        const int i0 = static_cast<int>(std::floor(pos));
        const int i1 = std::min(i0 + 1, src - 1);
        const double frac = pos - i0;
        taps[static_cast<std::size_t>(d)] = {i0, i1, 1.0 - frac, frac};
    }
    return taps;
}

}  // namespace

Image resize_bilinear(const Image& src, int height, int width) {
    if (height < 1 || width < 1) throw InvalidArgument("resize target must be non-empty");
    if (src.height() == height && src.width() == width) return src;
    const auto ty = bilinear_taps(src.height(), height);
    const auto tx = bilinear_taps(src.width(), width);
    Image out(height, width, src.channels());
    for (int c = 0; c < src.channels(); ++c) {
        for (int y = 0; y < height; ++y) {
            const Tap& a = ty[static_cast<std::size_t>(y)];
            for (int x = 0; x < width; ++x) {
                const Tap& b = tx[static_cast<std::size_t>(x)];
                out.at(y, x, c) = a.w0 * (b.w0 * src.at(a.i0, b.i0, c) + b.w1 * src.at(a.i0, b.i1, c)) +
                                  a.w1 * (b.w0 * src.at(a.i1, b.i0, c) + b.w1 * src.at(a.i1, b.i1, c));
            }
        }
    }
    return out;
}

Image resize_bilinear_adjoint(const Image& grad, int height, int width) {
    if (grad.height() == height && grad.width() == width) return grad;
    const auto ty = bilinear_taps(height, grad.height());
    const auto tx = bilinear_taps(width, grad.width());
    Image out(height, width, grad.channels());
    for (int c = 0; c < grad.channels(); ++c) {
        for (int y = 0; y < grad.height(); ++y) {
            const Tap& a = ty[static_cast<std::size_t>(y)];
            for (int x = 0; x < grad.width(); ++x) {
                const Tap& b = tx[static_cast<std::size_t>(x)];
                const double g = grad.at(y, x, c);
                out.at(a.i0, b.i0, c) += a.w0 * b.w0 * g;
                out.at(a.i0, b.i1, c) += a.w0 * b.w1 * g;
                out.at(a.i1, b.i0, c) += a.w1 * b.w0 * g;
                out.at(a.i1, b.i1, c) += a.w1 * b.w1 * g;
            }
        }
    }
    return out;
}

Image adapt_channels(const Image& src, int channels) {
    if (channels < 1) throw InvalidArgument("channel count must be positive");
    if (src.channels() == channels) return src;
    Image out(src.height(), src.width(), channels);
    if (src.channels() == 1) {
        for (int c = 0; c < channels; ++c) std::ranges::copy(src.plane(0), out.plane(c).begin());
    } else if (channels == 1) {
        auto dst = out.plane(0);
        const double inv = 1.0 / src.channels();
        for (int c = 0; c < src.channels(); ++c) {
            auto p = src.plane(c);
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += p[i] * inv;
        }
    } else {
        throw InvalidArgument("cannot adapt " + std::to_string(src.channels()) + " channels to " +
                              std::to_string(channels));
    }
    return out;
}

Image adapt_channels_adjoint(const Image& grad, int source_channels) {
    if (grad.channels() == source_channels) return grad;
    Image out(grad.height(), grad.width(), source_channels);
    if (source_channels == 1) {
        auto dst = out.plane(0);
        for (int c = 0; c < grad.channels(); ++c) {
            auto p = grad.plane(c);
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += p[i];
        }
    } else if (grad.channels() == 1) {
        const double inv = 1.0 / source_channels;
        auto g = grad.plane(0);
        for (int c = 0; c < source_channels; ++c) {
            auto dst = out.plane(c);
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = g[i] * inv;
        }
    } else {
        throw InvalidArgument("unsupported channel adjoint");
    }
    return out;
}

}  // namespace neva
