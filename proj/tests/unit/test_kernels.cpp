#include <doctest.h>

#include <random>
#include <vector>

#include "helpers.hpp"
#include "neva/foveation.hpp"
#include "neva/simd/kernels.hpp"

using namespace neva;

namespace {

std::vector<double> randoms(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar kernels on hand values") {
    const auto& k = simd::scalar_kernels();
    const double a[] = {1, 2, 3, 4, 5};
    const double b[] = {2, -1, 0.5, 0, 1};
    CHECK(k.dot(a, b, 5) == doctest::Approx(2 - 2 + 1.5 + 0 + 5));
    CHECK(k.dot(a, b, 0) == 0.0);

    double y[] = {1, 1, 1, 1, 1};
    k.axpy(2.0, a, y, 5);
    CHECK(y[4] == 11.0);

    const double m[] = {1, 0, 0.25, 1, 0};
    double out[5];
    k.blend(m, a, b, out, 5);
    CHECK(out[0] == 1.0);
    CHECK(out[1] == -1.0);
    CHECK(out[2] == doctest::Approx(0.25 * 3 + 0.75 * 0.5));

    const double in[] = {-1, 0, 2, -0.5, 3};
    k.relu(in, out, 5);
    CHECK(out[0] == 0.0);
    CHECK(out[2] == 2.0);
    const double g[] = {5, 5, 5, 5, 5};
    k.relu_backward(in, g, out, 5);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
    CHECK(out[4] == 5.0);
}

TEST_CASE("avx2 kernels match the scalar reference") {
    const simd::KernelTable* wide = simd::avx2_kernels();
    if (!wide) {
        MESSAGE("AVX2 kernels unavailable on this machine; equivalence not exercised");
        return;
    }
    const auto& ref = simd::scalar_kernels();
    std::mt19937_64 rng(11);
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 31u, 64u, 100u, 1023u}) {
        CAPTURE(n);
        const auto a = randoms(n, rng), b = randoms(n, rng);
        const double d_ref = ref.dot(a.data(), b.data(), n);
        const double d_wide = wide->dot(a.data(), b.data(), n);
        CHECK(std::abs(d_ref - d_wide) <= 1e-13 * (1.0 + static_cast<double>(n)));

        auto y_ref = randoms(n, rng);
        auto y_wide = y_ref;
        ref.axpy(0.37, a.data(), y_ref.data(), n);
        wide->axpy(0.37, a.data(), y_wide.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y_ref[i] - y_wide[i]) <= 1e-15);

        const auto m = randoms(n, rng, 0.0, 1.0);
        std::vector<double> o_ref(n), o_wide(n);
        ref.blend(m.data(), a.data(), b.data(), o_ref.data(), n);
        wide->blend(m.data(), a.data(), b.data(), o_wide.data(), n);
        CHECK(o_ref == o_wide);

        ref.relu(a.data(), o_ref.data(), n);
        wide->relu(a.data(), o_wide.data(), n);
        CHECK(o_ref == o_wide);

        ref.relu_backward(a.data(), b.data(), o_ref.data(), n);
        wide->relu_backward(a.data(), b.data(), o_wide.data(), n);
        CHECK(o_ref == o_wide);
    }
}

TEST_CASE("kernel selection") {
    const std::string before = simd::active().name;
    CHECK_FALSE(simd::select("no-such-kernels"));
    CHECK(simd::select("scalar"));
    CHECK(std::string(simd::active().name) == "scalar");
    if (simd::avx2_kernels()) {
        CHECK(simd::select("avx2"));
        CHECK(std::string(simd::active().name) == "avx2");
    }
    simd::select(before);
}

TEST_CASE("foveation agrees across kernel sets") {
    if (!simd::avx2_kernels()) return;
    const std::string before = simd::active().name;
    std::mt19937_64 rng(5);
    const Image s = testing::random_image(23, 37, 3, rng);
    const std::vector<Fixation> fx{{0.2, 0.3}, {0.8, 0.6}, {0.5, 0.5}};
    simd::select("scalar");
    const auto a = foveation::rollout(s, fx, {});
    simd::select("avx2");
    const auto b = foveation::rollout(s, fx, {});
    simd::select(before);
    CHECK(testing::max_abs_diff(a.perceived(), b.perceived()) <= 1e-14);
    CHECK(a.mask() == b.mask());
}

}
