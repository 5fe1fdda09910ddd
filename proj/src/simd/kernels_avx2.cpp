// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <algorithm>
#include <immintrin.h>

#include "neva/simd/kernels.hpp"

namespace neva::simd {
namespace {

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc0 = _mm256_add_pd(acc0, acc1);
    __m128d lo = _mm256_castpd256_pd128(acc0);
    __m128d hi = _mm256_extractf128_pd(acc0, 1);
    lo = _mm_add_pd(lo, hi);
    double sum = _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

// No FMA here: the blend must round exactly like the scalar reference so that
// a blend weight of 1 returns the sharp pixel untouched.
void blend_avx2(const double* mask, const double* sharp, const double* coarse, double* out,
                std::size_t n) {
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d m = _mm256_loadu_pd(mask + i);
        const __m256d s = _mm256_loadu_pd(sharp + i);
        const __m256d c = _mm256_loadu_pd(coarse + i);
        const __m256d v = _mm256_add_pd(_mm256_mul_pd(m, s), _mm256_mul_pd(_mm256_sub_pd(one, m), c));
        const __m256d lo = _mm256_min_pd(s, c);
        const __m256d hi = _mm256_max_pd(s, c);
        _mm256_storeu_pd(out + i, _mm256_min_pd(_mm256_max_pd(v, lo), hi));
    }
    for (; i < n; ++i) {
        const double v = mask[i] * sharp[i] + (1.0 - mask[i]) * coarse[i];
        out[i] = std::clamp(v, std::min(sharp[i], coarse[i]), std::max(sharp[i], coarse[i]));
    }
}

void relu_avx2(const double* in, double* out, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(in + i);
        _mm256_storeu_pd(out + i, _mm256_and_pd(v, _mm256_cmp_pd(v, zero, _CMP_GT_OQ)));
    }
    for (; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward_avx2(const double* in, const double* grad_out, double* grad, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d keep = _mm256_cmp_pd(_mm256_loadu_pd(in + i), zero, _CMP_GT_OQ);
        _mm256_storeu_pd(grad + i, _mm256_and_pd(_mm256_loadu_pd(grad_out + i), keep));
    }
    for (; i < n; ++i) grad[i] = in[i] > 0.0 ? grad_out[i] : 0.0;
}

}  // namespace

extern const KernelTable kAvx2Table;
const KernelTable kAvx2Table{
    "avx2", dot_avx2, axpy_avx2, blend_avx2, relu_avx2, relu_backward_avx2,
};

}  // namespace neva::simd
