#include "neva/foveation.hpp"

#include <algorithm>
#include <cmath>

#include "neva/simd/kernels.hpp"

namespace neva::foveation {

void FoveationConfig::validate() const {
    if (!(sigma_fovea > 0.0) || !std::isfinite(sigma_fovea))
        throw InvalidArgument("sigma_fovea must be positive");
    if (!(sigma_blur > 0.0) || !std::isfinite(sigma_blur))
        throw InvalidArgument("sigma_blur must be positive");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in [0,1]");
}

namespace {

int reflect101(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

std::vector<double> gaussian_kernel(double sigma_px) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma_px));
    std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        const double v = std::exp(-(k * k) / (2.0 * sigma_px * sigma_px));
        w[static_cast<std::size_t>(k + radius)] = v;
        total += v;
    }
    for (double& v : w) v /= total;
    return w;
}

void blur_rows(std::span<const double> in, std::span<double> out, int height, int width,
               const std::vector<double>& w) {
    const auto& kern = simd::active();
    const int radius = static_cast<int>(w.size() / 2);
    std::ranges::fill(out, 0.0);
    for (int y = 0; y < height; ++y) {
        const double* src = in.data() + static_cast<std::size_t>(y) * width;
        double* dst = out.data() + static_cast<std::size_t>(y) * width;
        const int lo = std::min(radius, width);
        const int hi = std::max(lo, width - radius);
        for (int x = 0; x < lo; ++x)
            for (int k = -radius; k <= radius; ++k)
                dst[x] += w[static_cast<std::size_t>(k + radius)] * src[reflect101(x + k, width)];
        if (hi > lo) {
            for (int k = -radius; k <= radius; ++k)
                kern.axpy(w[static_cast<std::size_t>(k + radius)], src + lo + k, dst + lo,
                          static_cast<std::size_t>(hi - lo));
        }
        for (int x = hi; x < width; ++x)
            for (int k = -radius; k <= radius; ++k)
                dst[x] += w[static_cast<std::size_t>(k + radius)] * src[reflect101(x + k, width)];
    }
}

void blur_cols(std::span<const double> in, std::span<double> out, int height, int width,
               const std::vector<double>& w) {
    const auto& kern = simd::active();
    const int radius = static_cast<int>(w.size() / 2);
    std::ranges::fill(out, 0.0);
    for (int y = 0; y < height; ++y) {
        double* dst = out.data() + static_cast<std::size_t>(y) * width;
        for (int k = -radius; k <= radius; ++k) {
            const double* src = in.data() + static_cast<std::size_t>(reflect101(y + k, height)) * width;
            kern.axpy(w[static_cast<std::size_t>(k + radius)], src, dst, static_cast<std::size_t>(width));
        }
    }
}

// Squared blob-space distance scale per axis (longer side = 1).
struct AxisScale {
    double sx, sy;
};

AxisScale axis_scale(int height, int width) {
    const double longer = std::max(height, width);
    return {width / longer, height / longer};
}

void check_shapes(const Image& s, const Image& coarse) {
    if (!s.same_shape(coarse)) throw InvalidArgument("stimulus and coarse image shapes differ");
}

// Sum over channels of grad * (sharp - coarse): the gradient reaching the mask.
Image mask_grad(const Image& s, const Image& coarse, const Image& grad_out) {
    if (!grad_out.same_shape(s)) throw InvalidArgument("gradient shape does not match stimulus");
    Image g(s.height(), s.width(), 1);
    auto dst = g.plane(0);
    for (int c = 0; c < s.channels(); ++c) {
        auto gs = grad_out.plane(c);
        auto ps = s.plane(c);
        auto pc = coarse.plane(c);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += gs[i] * (ps[i] - pc[i]);
    }
    return g;
}

Image blend(const Image& mask, const Image& s, const Image& coarse) {
    const auto& kern = simd::active();
    Image out(s.height(), s.width(), s.channels());
    for (int c = 0; c < s.channels(); ++c)
        kern.blend(mask.data(), s.plane(c).data(), coarse.plane(c).data(), out.plane(c).data(),
                   s.plane_size());
    return out;
}

}  // namespace

Image blur_stimulus(const Image& s, double sigma_blur) {
    if (!(sigma_blur > 0.0) || !std::isfinite(sigma_blur))
        throw InvalidArgument("sigma_blur must be positive");
    const double sigma_px = sigma_blur * std::max(s.height(), s.width());
    const auto w = gaussian_kernel(sigma_px);
    Image out(s.height(), s.width(), s.channels());
    if (w.size() == 1) {
        out = s;
        return out;
    }
    std::vector<double> tmp(s.plane_size());
    for (int c = 0; c < s.channels(); ++c) {
        blur_rows(s.plane(c), tmp, s.height(), s.width(), w);
        blur_cols(tmp, out.plane(c), s.height(), s.width(), w);
        for (double& v : out.plane(c)) v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

Image gaussian_blob(int height, int width, Fixation xi, double sigma_fovea) {
    if (height < 1 || width < 1) throw InvalidArgument("blob grid must be non-empty");
    if (!(sigma_fovea > 0.0)) throw InvalidArgument("sigma_fovea must be positive");
    if (!in_unit_square(xi)) throw InvalidArgument("fixation outside the unit square");
    const auto [sx, sy] = axis_scale(height, width);
    const double inv = 1.0 / (2.0 * sigma_fovea * sigma_fovea);
    Image g(height, width, 1);
    std::vector<double> ex(static_cast<std::size_t>(width));
    for (int x = 0; x < width; ++x) {
        const double d = (pixel_center(x, width) - xi.x) * sx;
        ex[static_cast<std::size_t>(x)] = d * d;
    }
    for (int y = 0; y < height; ++y) {
        const double d = (pixel_center(y, height) - xi.y) * sy;
        const double dy2 = d * d;
        for (int x = 0; x < width; ++x) g.at(y, x) = std::exp(-(ex[static_cast<std::size_t>(x)] + dy2) * inv);
    }
    return g;
}

FixationGradient gaussian_blob_vjp(int height, int width, Fixation xi, double sigma_fovea,
                                   const Image& grad_blob) {
    if (grad_blob.height() != height || grad_blob.width() != width || grad_blob.channels() != 1)
        throw InvalidArgument("blob gradient must be a single-channel map of the blob's shape");
    const auto [sx, sy] = axis_scale(height, width);
    const double inv = 1.0 / (2.0 * sigma_fovea * sigma_fovea);
    const double inv_var = 1.0 / (sigma_fovea * sigma_fovea);
    FixationGradient out;
    for (int y = 0; y < height; ++y) {
        const double ry = (pixel_center(y, height) - xi.y) * sy;
        for (int x = 0; x < width; ++x) {
            const double g = grad_blob.at(y, x);
            if (g == 0.0) continue;
            const double rx = (pixel_center(x, width) - xi.x) * sx;
            const double blob = std::exp(-(rx * rx + ry * ry) * inv);
            // d blob / d xi = blob * r * scale / sigma^2
            out.dx += g * blob * rx * sx * inv_var;
            out.dy += g * blob * ry * sy * inv_var;
        }
    }
    return out;
}

Image foveate(const Image& s, const Image& coarse, Fixation xi, const FoveationConfig& cfg) {
    check_shapes(s, coarse);
    cfg.validate();
    return blend(gaussian_blob(s.height(), s.width(), xi, cfg.sigma_fovea), s, coarse);
}

FixationGradient foveate_vjp(const Image& s, const Image& coarse, Fixation xi,
                             const FoveationConfig& cfg, const Image& grad_out) {
    check_shapes(s, coarse);
    return gaussian_blob_vjp(s.height(), s.width(), xi, cfg.sigma_fovea, mask_grad(s, coarse, grad_out));
}

PerceptualState init_state(std::shared_ptr<const Image> s, std::shared_ptr<const Image> coarse,
                           const FoveationConfig& cfg) {
    if (!s || !coarse) throw InvalidArgument("null stimulus");
    check_shapes(*s, *coarse);
    cfg.validate();
    PerceptualState st;
    st.config_ = cfg;
    st.accumulator_ = Image(s->height(), s->width(), 1);
    st.mask_ = st.accumulator_;
    st.perceived_ = *coarse;
    st.stimulus_ = std::move(s);
    st.coarse_ = std::move(coarse);
    return st;
}

PerceptualState init_state(const Image& s, const FoveationConfig& cfg) {
    cfg.validate();
    validate_stimulus(s);
    auto sharp = std::make_shared<const Image>(s);
    auto coarse = std::make_shared<const Image>(blur_stimulus(s, cfg.sigma_blur));
    return init_state(std::move(sharp), std::move(coarse), cfg);
}

PerceptualState update_state(const PerceptualState& state, Fixation xi) {
    const Image& s = state.stimulus();
    PerceptualState next;
    next.stimulus_ = state.stimulus_;
    next.coarse_ = state.coarse_;
    next.config_ = state.config_;
    next.step_ = state.step_ + 1;
    next.accumulator_ = gaussian_blob(s.height(), s.width(), xi, state.config_.sigma_fovea);
    next.mask_ = Image(s.height(), s.width(), 1);
    auto acc = next.accumulator_.values();
    auto prev = state.accumulator_.values();
    auto mask = next.mask_.values();
    const double gamma = state.config_.gamma;
    for (std::size_t i = 0; i < acc.size(); ++i) {
        acc[i] = gamma * prev[i] + acc[i];
        mask[i] = std::clamp(acc[i], 0.0, 1.0);
    }
    next.perceived_ = blend(next.mask_, s, state.coarse());
    return next;
}

PerceptualState rollout(const Image& s, std::span<const Fixation> fixations, const FoveationConfig& cfg) {
    PerceptualState st = init_state(s, cfg);
    for (const Fixation& f : fixations) st = update_state(st, f);
    return st;
}

Image accumulator_grad(const PerceptualState& state, const Image& grad_perceived) {
    Image g = mask_grad(state.stimulus(), state.coarse(), grad_perceived);
    auto acc = state.accumulator().values();
    auto gv = g.values();
    for (std::size_t i = 0; i < gv.size(); ++i)
        if (acc[i] >= 1.0) gv[i] = 0.0;
    return g;
}

}  // namespace neva::foveation
