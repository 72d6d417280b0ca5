#include "bsdelab/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace bsdelab::kernels::scalar {

// The reduction order mirrors the 4-lane vector layout: four strided partial
// sums, combined as (s0 + s1) + (s2 + s3), then the tail in sequence. Keeping
// this order makes the vector variant bit-identical.
double weighted_sum(std::span<const double> w, std::span<const double> x) noexcept {
    const std::size_t n = std::min(w.size(), x.size());
    const std::size_t blocked = n - n % 4;
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < blocked; i += 4) {
        for (std::size_t j = 0; j < 4; ++j) {
            s[j] = s[j] + w[i + j] * x[i + j];
        }
    }
    double total = (s[0] + s[1]) + (s[2] + s[3]);
    for (std::size_t i = blocked; i < n; ++i) {
        total = total + w[i] * x[i];
    }
    return total;
}

double max_abs(std::span<const double> x) noexcept {
    double m = 0.0;
    for (double v : x) {
        m = std::max(m, std::fabs(v));
    }
    return m;
}

void ladder_advance(std::span<const double> increments, std::size_t n_lanes, double eps,
                    LadderLanes lanes) noexcept {
    const std::size_t n_steps = increments.size() / n_lanes;
    for (std::size_t step = 0; step < n_steps; ++step) {
        const double* inc = increments.data() + step * n_lanes;
        for (std::size_t l = 0; l < n_lanes; ++l) {
            const double w = lanes.w[l] + inc[l];
            const double diff = w - lanes.anchor[l];
            const bool crossed = std::fabs(diff) >= eps;
            if (crossed) {
                lanes.up[l] = lanes.up[l] + std::max(diff, 0.0);
                lanes.down[l] = lanes.down[l] + std::max(-diff, 0.0);
                lanes.anchor[l] = w;
                lanes.crossings[l] = lanes.crossings[l] + 1.0;
            }
            lanes.w[l] = w;
            lanes.sup_gap[l] = std::max(lanes.sup_gap[l], std::fabs(w - lanes.anchor[l]));
        }
    }
}

}  // namespace bsdelab::kernels::scalar
