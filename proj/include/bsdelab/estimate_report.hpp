#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace bsdelab {

/// EXPLICIT checks carry a printed constant and are hard assertions;
/// EMPIRICAL checks report a ratio whose boundedness is observed.
enum class CheckTier { explicit_constant, empirical };

const char* tier_name(CheckTier tier) noexcept;

/// One evaluated inequality lhs ≤ rhs.
struct EstimateReport {
    std::string id;
    CheckTier tier = CheckTier::explicit_constant;
    double lhs = 0.0;
    double rhs = 0.0;
    double constant = 0.0;  ///< constant used (0 for empirical checks)
    double ratio = 0.0;     ///< lhs / rhs, 0 when both vanish
    bool pass = false;
    bool vacuous = false;   ///< both sides zero
    std::uint64_t fingerprint = 0;
    std::vector<std::pair<std::string, double>> details;

    /// pass ⇔ lhs ≤ rhs + rel_tol·max(1, |lhs|, |rhs|).
    static EstimateReport make_explicit(std::string id, double lhs, double rhs, double constant,
                                        double rel_tol = 1e-9);
    /// pass ⇔ ratio finite.
    static EstimateReport make_empirical(std::string id, double lhs, double rhs);

    EstimateReport& with(std::string key, double value);
    double detail(const std::string& key) const;
};

}  // namespace bsdelab
