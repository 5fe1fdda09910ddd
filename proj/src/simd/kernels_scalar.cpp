#include <algorithm>

#include "neva/simd/kernels.hpp"

namespace neva::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void blend_scalar(const double* mask, const double* sharp, const double* coarse,
                  double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double v = mask[i] * sharp[i] + (1.0 - mask[i]) * coarse[i];
        out[i] = std::clamp(v, std::min(sharp[i], coarse[i]), std::max(sharp[i], coarse[i]));
    }
}

void relu_scalar(const double* in, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward_scalar(const double* in, const double* grad_out, double* grad,
                          std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) grad[i] = in[i] > 0.0 ? grad_out[i] : 0.0;
}

constexpr KernelTable kScalar{
    "scalar", dot_scalar, axpy_scalar, blend_scalar, relu_scalar, relu_backward_scalar,
};

}  // namespace

const KernelTable& scalar_kernels() noexcept { return kScalar; }

}  // namespace neva::simd
