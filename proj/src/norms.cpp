#include "bsdelab/norms.hpp"

#include "bsdelab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bsdelab {

void NormConfig::validate() const {
    if (!(p > 1.0)) {
        throw PreconditionError("norm exponent p must exceed 1 (got " + std::to_string(p) + ")");
    }
    if (!(alpha >= 0.0)) {
        throw PreconditionError("norm weight alpha must be non-negative");
    }
}

double norm_lp(const ScenarioTree& tree, std::span<const double> terminal, double p) {
    if (terminal.size() != tree.leaves()) {
        throw PreconditionError("norm_lp: terminal values do not cover the leaves");
    }
    std::vector<double> powered(terminal.size());
    std::transform(terminal.begin(), terminal.end(), powered.begin(), [p](double v) { return std::pow(std::fabs(v), p); });
    return expectation(tree, powered, tree.n_steps());
}

double norm_sp(const ScenarioTree& tree, const AdaptedProcess& y, double p, double weight_rate) {
    const std::size_t n = tree.n_steps();
    const auto leaf = accumulate_paths(tree, 0.0, [&](std::size_t k, std::size_t i, double acc) {
        const double t = tree.time(std::min(k + 1, n));
        return std::max(acc, std::exp(weight_rate * t) * std::fabs(y(k, i)));
    });
    return leaf_expectation(tree, leaf, [p](double v) { return std::pow(v, p); });
}

double norm_sp_ladlag(const ScenarioTree& tree, const LadlagProcess& x, double p) {
    const auto leaf = accumulate_paths(tree, 0.0, [&](std::size_t k, std::size_t i, double acc) {
        return std::max({acc, std::fabs(x.left(k, i)), std::fabs(x.value(k, i)), std::fabs(x.right(k, i))});
    });
    return leaf_expectation(tree, leaf, [p](double v) { return std::pow(v, p); });
}

double norm_h(const ScenarioTree& tree, const PredictableProcess& z, double p, double alpha) {
    const double dt = tree.dt();
    const auto leaf = accumulate_paths(tree, 0.0, [&](std::size_t k, std::size_t i, double acc) {
        if (k == 0) {
            return acc;
        }
        const auto zk = z.at_node(tree, k, i);
        double sq = 0.0;
        for (double v : zk) {
            sq += v * v;
        }
        return acc + std::exp(alpha * tree.time(k)) * sq * dt;
    });
    return leaf_expectation(tree, leaf, [p](double v) { return std::pow(v, p / 2.0); });
}

double norm_h1(const ScenarioTree& tree, const AdaptedProcess& x, double p, double alpha) {
    const double dt = tree.dt();
    const auto leaf = accumulate_paths(tree, 0.0, [&](std::size_t k, std::size_t i, double acc) {
        if (k == 0) {
            return acc;
        }
        const double v = x(k - 1, tree.parent(k, i));
        return acc + std::exp(alpha * tree.time(k)) * v * v * dt;
    });
    return leaf_expectation(tree, leaf, [p](double v) { return std::pow(v, p / 2.0); });
}

double norm_m(const ScenarioTree& tree, const AdaptedProcess& m, double p, double alpha) {
    const auto leaf = accumulate_paths(tree, 0.0, [&](std::size_t k, std::size_t i, double acc) {
        if (k == 0) {
            return acc;
        }
        const double jump = m(k, i) - m(k - 1, tree.parent(k, i));
        return acc + std::exp(alpha * tree.time(k)) * jump * jump;
    });
    return leaf_expectation(tree, leaf, [p](double v) { return std::pow(v, p / 2.0); });
}

double norm_i(const ScenarioTree& tree, const AdaptedProcess& kp, double p, double alpha) {
    if (std::fabs(kp(0, 0)) > 1e-12) {
        throw PreconditionError("norm_i: finite-variation process must start at 0");
    }
    const auto leaf = accumulate_paths(tree, 0.0, [&](std::size_t k, std::size_t i, double acc) {
        if (k == 0) {
            return acc;
        }
        const double jump = kp(k, i) - kp(k - 1, tree.parent(k, i));
        return acc + std::exp(0.5 * alpha * tree.time(k)) * std::fabs(jump);
    });
    return leaf_expectation(tree, leaf, [p](double v) { return std::pow(v, p); });
}

NormReport norm_report(const ScenarioTree& tree, const AdaptedProcess& y, const PredictableProcess& z,
                       const AdaptedProcess& m, const AdaptedProcess& k, const NormConfig& cfg) {
    cfg.validate();
    NormReport r;
    r.s_p = norm_sp(tree, y, cfg.p);
    r.h_p_alpha = norm_h(tree, z, cfg.p, cfg.alpha);
    r.h1_p_alpha = norm_h1(tree, y, cfg.p, cfg.alpha);
    r.m_p_alpha = norm_m(tree, m, cfg.p, cfg.alpha);
    r.i_p_alpha = norm_i(tree, k, cfg.p, cfg.alpha);
    return r;
}

double phi_p(double y, double p) {
    if (y == 0.0) {
        return 0.0;
    }
    return std::copysign(std::pow(std::fabs(y), p - 1.0), y);
}

double power_lower_factor(double n, double ell) {
    return std::min(1.0, std::pow(n, ell - 1.0));
}

double power_upper_factor(double n, double ell) {
    return std::max(1.0, std::pow(n, ell - 1.0));
}

PowerSumBounds power_sum_bounds(std::span<const double> values, double ell) {
    if (values.empty()) {
        throw PreconditionError("power_sum_bounds: empty input");
    }
    if (!(ell > 0.0)) {
        throw PreconditionError("power_sum_bounds: exponent must be positive");
    }
    double sum = 0.0;
    double sum_pow = 0.0;
    for (double a : values) {
        if (!(a > 0.0)) {
            throw PreconditionError("power_sum_bounds: entries must be positive");
        }
        sum += a;
        sum_pow += std::pow(a, ell);
    }
    const double n = static_cast<double>(values.size());
    return {power_lower_factor(n, ell) * sum_pow, std::pow(sum, ell), power_upper_factor(n, ell) * sum_pow};
}

YoungBound young_bound(double a, double b, double beta, double p) {
    if (a < 0.0 || b < 0.0 || !(beta > 0.0) || !(p > 1.0)) {
        throw PreconditionError("young_bound: needs a, b >= 0, beta > 0, p > 1");
    }
    const double q = p / (p - 1.0);
    return {a * b, beta * std::pow(a, p) + std::pow(b, q) / (q * std::pow(beta * p, q / p))};
}

double burkholder_constant(double p) {
    if (p < 2.0) {
        throw PreconditionError("Burkholder constant is defined for p >= 2");
    }
    if (p == 2.0) {
        return 2.0;
    }
    return std::pow(std::max(p / 2.0, p / (p - 2.0) - 1.0), p);
}

double burkholder_constant_alt(double p) {
    if (p < 2.0) {
        throw PreconditionError("Burkholder constant is defined for p >= 2");
    }
    if (p == 2.0) {
        return 2.0;
    }
    return std::pow(std::max(p / 2.0, p / (p - 2.0)) - 1.0, p);
}

double c_prime(double p) {
    if (!(p > 1.0)) {
        throw PreconditionError("C'_p needs p > 1");
    }
    if (p <= 2.0) {
        return std::pow(p * p / (p - 1.0), 1.0 / (p - 1.0));
    }
    double best = std::numeric_limits<double>::infinity();
    for (int k = 2; static_cast<double>(k) < p; ++k) {
        double prod = p;
        for (int j = 2; j <= k; ++j) {
            prod *= p * j / (p - j);
        }
        best = std::min(best, std::pow(prod, static_cast<double>(k) / (p - 1.0)));
    }
    return best;
}

double meyer_constant(double p) {
    return c_prime(p) * (1.0 + p / (p - 1.0));
}

double ladlag_meyer_constant(double p) {
    const double c = meyer_constant(p);
    return c * (1.0 + c);
}

ConstantsTable ConstantsTable::for_exponent(double p) {
    ConstantsTable t;
    t.p = p;
    if (p >= 2.0) {
        t.c_star = burkholder_constant(p);
        t.c_star_alt = burkholder_constant_alt(p);
    }
    t.c_prime = bsdelab::c_prime(p);
    t.meyer = meyer_constant(p);
    t.ladlag_meyer = ladlag_meyer_constant(p);
    return t;
}

}  // namespace bsdelab
