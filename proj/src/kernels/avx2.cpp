#include "bsdelab/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace bsdelab::kernels::avx2 {

namespace {

inline __m256d abs_pd(__m256d v) {
    return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

}  // namespace

double weighted_sum(std::span<const double> w, std::span<const double> x) noexcept {
    const std::size_t n = std::min(w.size(), x.size());
    const std::size_t blocked = n - n % 4;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < blocked; i += 4) {
        const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(w.data() + i), _mm256_loadu_pd(x.data() + i));
        acc = _mm256_add_pd(acc, prod);
    }
    alignas(32) double s[4];
    _mm256_store_pd(s, acc);
    double total = (s[0] + s[1]) + (s[2] + s[3]);
    for (std::size_t i = blocked; i < n; ++i) {
        total = total + w[i] * x[i];
    }
    return total;
}

double max_abs(std::span<const double> x) noexcept {
    const std::size_t n = x.size();
    const std::size_t blocked = n - n % 4;
    __m256d m = _mm256_setzero_pd();
    for (std::size_t i = 0; i < blocked; i += 4) {
        m = _mm256_max_pd(m, abs_pd(_mm256_loadu_pd(x.data() + i)));
    }
    alignas(32) double s[4];
    _mm256_store_pd(s, m);
    double out = std::max(std::max(s[0], s[1]), std::max(s[2], s[3]));
    for (std::size_t i = blocked; i < n; ++i) {
        out = std::max(out, std::fabs(x[i]));
    }
    return out;
}

void ladder_advance(std::span<const double> increments, std::size_t n_lanes, double eps,
                    LadderLanes lanes) noexcept {
    const std::size_t n_steps = increments.size() / n_lanes;
    const std::size_t vec_lanes = n_lanes - n_lanes % 4;
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);

    for (std::size_t l0 = 0; l0 < vec_lanes; l0 += 4) {
        __m256d w = _mm256_loadu_pd(lanes.w.data() + l0);
        __m256d anchor = _mm256_loadu_pd(lanes.anchor.data() + l0);
        __m256d gap = _mm256_loadu_pd(lanes.sup_gap.data() + l0);
        __m256d up = _mm256_loadu_pd(lanes.up.data() + l0);
        __m256d down = _mm256_loadu_pd(lanes.down.data() + l0);
        __m256d count = _mm256_loadu_pd(lanes.crossings.data() + l0);
        for (std::size_t step = 0; step < n_steps; ++step) {
            w = _mm256_add_pd(w, _mm256_loadu_pd(increments.data() + step * n_lanes + l0));
            const __m256d diff = _mm256_sub_pd(w, anchor);
            const __m256d crossed = _mm256_cmp_pd(abs_pd(diff), veps, _CMP_GE_OQ);
            const __m256d pos = _mm256_max_pd(diff, zero);
            const __m256d neg = _mm256_max_pd(_mm256_sub_pd(zero, diff), zero);
            up = _mm256_blendv_pd(up, _mm256_add_pd(up, pos), crossed);
            down = _mm256_blendv_pd(down, _mm256_add_pd(down, neg), crossed);
            count = _mm256_blendv_pd(count, _mm256_add_pd(count, one), crossed);
            anchor = _mm256_blendv_pd(anchor, w, crossed);
            gap = _mm256_max_pd(gap, abs_pd(_mm256_sub_pd(w, anchor)));
        }
        _mm256_storeu_pd(lanes.w.data() + l0, w);
        _mm256_storeu_pd(lanes.anchor.data() + l0, anchor);
        _mm256_storeu_pd(lanes.sup_gap.data() + l0, gap);
        _mm256_storeu_pd(lanes.up.data() + l0, up);
        _mm256_storeu_pd(lanes.down.data() + l0, down);
        _mm256_storeu_pd(lanes.crossings.data() + l0, count);
    }

    if (vec_lanes < n_lanes) {
        // Remaining lanes go through the reference loop on a strided view.
        for (std::size_t step = 0; step < n_steps; ++step) {
            const double* inc = increments.data() + step * n_lanes;
            for (std::size_t l = vec_lanes; l < n_lanes; ++l) {
                const double wl = lanes.w[l] + inc[l];
                const double diff = wl - lanes.anchor[l];
                if (std::fabs(diff) >= eps) {
                    lanes.up[l] = lanes.up[l] + std::max(diff, 0.0);
                    lanes.down[l] = lanes.down[l] + std::max(-diff, 0.0);
                    lanes.anchor[l] = wl;
                    lanes.crossings[l] = lanes.crossings[l] + 1.0;
                }
                lanes.w[l] = wl;
                lanes.sup_gap[l] = std::max(lanes.sup_gap[l], std::fabs(wl - lanes.anchor[l]));
            }
        }
    }
}

}  // namespace bsdelab::kernels::avx2
