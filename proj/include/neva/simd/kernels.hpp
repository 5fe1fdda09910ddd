#pragma once

// Data-parallel inner loops shared by the foveation layer and the network
// engine. Every kernel has a scalar reference implementation; wider variants
// are picked once at startup from what the CPU reports.

#include <cstddef>
#include <string_view>

namespace neva::simd {

struct KernelTable {
    const char* name;

    // sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);

    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

    // out[i] = mask[i] * sharp[i] + (1 - mask[i]) * coarse[i], kept within
    // [min(sharp, coarse), max(sharp, coarse)] despite rounding
    void (*blend)(const double* mask, const double* sharp, const double* coarse,
                  double* out, std::size_t n);

    // out[i] = max(in[i], 0)
    void (*relu)(const double* in, double* out, std::size_t n);

    // grad[i] = in[i] > 0 ? grad_out[i] : 0
    void (*relu_backward)(const double* in, const double* grad_out, double* grad,
                          std::size_t n);
};

const KernelTable& scalar_kernels() noexcept;

// nullptr when the build or the running CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels() noexcept;

// Table used by the library. Chosen on first use: AVX2 when available unless
// the environment variable NEVA_SIMD is set to "scalar".
const KernelTable& active() noexcept;

// Overrides the active table for the rest of the process (tests, benchmarks).
// Returns false if the requested variant is unavailable.
bool select(std::string_view name) noexcept;

}  // namespace neva::simd
