#include "bsdelab/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace bsdelab::kernels {

namespace {

// -1: no override, otherwise static_cast<int>(Isa).
std::atomic<int> forced{-1};

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Isa env_or_detected() noexcept {
    static const Isa resolved = [] {
        const Isa best = cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
        if (const char* env = std::getenv("BSDELAB_ISA")) {
            const std::string v(env);
            if (v == "scalar") return Isa::scalar;
            if (v == "avx2") return best;
        }
        return best;
    }();
    return resolved;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
    return isa == Isa::avx2 ? "avx2" : "scalar";
}

Isa detected_isa() noexcept {
    return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

Isa active_isa() noexcept {
    const int f = forced.load(std::memory_order_relaxed);
    if (f >= 0) {
        return static_cast<Isa>(f);
    }
    return env_or_detected();
}

void force_isa(std::optional<Isa> isa) noexcept {
    if (!isa) {
        forced.store(-1, std::memory_order_relaxed);
        return;
    }
    const Isa effective = (*isa == Isa::avx2 && !cpu_has_avx2()) ? Isa::scalar : *isa;
    forced.store(static_cast<int>(effective), std::memory_order_relaxed);
}

double weighted_sum(std::span<const double> w, std::span<const double> x) noexcept {
    return active_isa() == Isa::avx2 ? avx2::weighted_sum(w, x) : scalar::weighted_sum(w, x);
}

double max_abs(std::span<const double> x) noexcept {
    return active_isa() == Isa::avx2 ? avx2::max_abs(x) : scalar::max_abs(x);
}

void ladder_advance(std::span<const double> increments, std::size_t n_lanes, double eps,
                    LadderLanes lanes) noexcept {
    if (active_isa() == Isa::avx2) {
        avx2::ladder_advance(increments, n_lanes, eps, lanes);
    } else {
        scalar::ladder_advance(increments, n_lanes, eps, lanes);
    }
}

}  // namespace bsdelab::kernels
