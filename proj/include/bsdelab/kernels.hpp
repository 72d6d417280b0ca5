#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference in
// kernels::scalar and an AVX2 variant in kernels::avx2; the unqualified
// entry points dispatch at runtime on the detected (or forced) ISA.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace bsdelab::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// Best ISA supported by the running CPU.
Isa detected_isa() noexcept;

/// ISA used by the dispatching entry points. Honors force_isa() and the
/// BSDELAB_ISA environment variable ("scalar" or "avx2").
Isa active_isa() noexcept;

/// Pin dispatch to one ISA (nullopt restores detection). Requests for an ISA
/// the CPU lacks fall back to scalar.
void force_isa(std::optional<Isa> isa) noexcept;

/// Per-lane state of the ε-ladder (step process tracking a walk). Arrays are
/// structure-of-arrays with one entry per lane.
struct LadderLanes {
    std::span<double> w;         ///< current walk value
    std::span<double> anchor;    ///< ladder value V (walk value at the last crossing)
    std::span<double> sup_gap;   ///< running max of |w - anchor| after each step
    std::span<double> up;        ///< cumulative positive ladder jumps (V+)
    std::span<double> down;      ///< cumulative negative ladder jumps (V-)
    std::span<double> crossings; ///< crossing count (stored as double for vector lanes)
};

namespace scalar {
double weighted_sum(std::span<const double> w, std::span<const double> x) noexcept;
double max_abs(std::span<const double> x) noexcept;
void ladder_advance(std::span<const double> increments, std::size_t n_lanes, double eps,
                    LadderLanes lanes) noexcept;
}  // namespace scalar

namespace avx2 {
double weighted_sum(std::span<const double> w, std::span<const double> x) noexcept;
double max_abs(std::span<const double> x) noexcept;
void ladder_advance(std::span<const double> increments, std::size_t n_lanes, double eps,
                    LadderLanes lanes) noexcept;
}  // namespace avx2

/// Σ w_i x_i. Spans must have equal length.
double weighted_sum(std::span<const double> w, std::span<const double> x) noexcept;

/// max_i |x_i| (0 for an empty span).
double max_abs(std::span<const double> x) noexcept;

/// Advances every lane through increments laid out step-major
/// ([step * n_lanes + lane]). A lane crosses when |w - anchor| >= eps; the
/// anchor then jumps to w and the jump is routed to up/down by sign.
void ladder_advance(std::span<const double> increments, std::size_t n_lanes, double eps,
                    LadderLanes lanes) noexcept;

}  // namespace bsdelab::kernels
