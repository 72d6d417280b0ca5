#include "bsdelab/generator.hpp"

#include "bsdelab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace bsdelab {

AdaptedProcess DriftSpec::realize(const ScenarioTree& tree) const {
    return AdaptedProcess::from_function(tree, [&](std::size_t k, std::size_t i) {
        double w = 0.0;
        for (double v : tree.w(k, i)) {
            w += v;
        }
        return constant + w_coef * w + reveal_coef * tree.reveal_sum(k, i);
    });
}

Generator::Generator(std::string kind, Fn fn, double l_y, double l_z, bool depends_on_solution)
    : kind_(std::move(kind)),
      fn_(std::make_shared<const Fn>(std::move(fn))),
      l_y_(l_y),
      l_z_(l_z),
      depends_on_solution_(depends_on_solution) {
    if (!(l_y >= 0.0) || !(l_z >= 0.0)) {
        throw PreconditionError("generator Lipschitz constants must be non-negative");
    }
}

AdaptedProcess Generator::g0(const ScenarioTree& tree) const {
    const std::vector<double> zero(tree.dim(), 0.0);
    return AdaptedProcess::from_function(tree, [&](std::size_t k, std::size_t i) { return (*this)(k, i, 0.0, zero); });
}

Generator Generator::clipped(double n) const {
    if (!(n > 0.0)) {
        throw PreconditionError("clipping level must be positive");
    }
    auto inner = fn_;
    Generator out(kind_ + "_clipped",
                  [inner, n](std::size_t k, std::size_t i, double y, std::span<const double> z) {
                      return std::clamp((*inner)(k, i, y, z), -n, n);
                  },
                  l_y_, l_z_, depends_on_solution_);
    return out;
}

Generator Generator::zero() {
    return constant(0.0);
}

Generator Generator::constant(double c) {
    return Generator("constant", [c](std::size_t, std::size_t, double, std::span<const double>) { return c; }, 0.0,
                     0.0, false);
}

Generator Generator::affine(AffineCoefficients coefficients) {
    auto coef = std::make_shared<const AffineCoefficients>(std::move(coefficients));
    double ly = 0.0;
    double lz = 0.0;
    const std::size_t steps = coef->lambda.n_steps();
    for (std::size_t k = 0; k <= steps; ++k) {
        for (std::size_t i = 0; i < coef->lambda.at(k).size(); ++i) {
            ly = std::max(ly, std::fabs(coef->lambda(k, i)));
            double sq = 0.0;
            for (const auto& e : coef->eta) {
                sq += e(k, i) * e(k, i);
            }
            lz = std::max(lz, std::sqrt(sq));
        }
    }
    bool depends = ly > 0.0 || lz > 0.0;
    Generator g(
        "affine",
        [coef](std::size_t k, std::size_t i, double y, std::span<const double> z) {
            double v = coef->g0(k, i) + coef->lambda(k, i) * y;
            for (std::size_t j = 0; j < coef->eta.size(); ++j) {
                v += coef->eta[j](k, i) * z[j];
            }
            return v;
        },
        ly, lz, depends);
    g.affine_ = coef;
    return g;
}

Generator Generator::affine(const ScenarioTree& tree, const DriftSpec& g0, double lambda, std::vector<double> eta) {
    if (eta.size() != tree.dim()) {
        throw PreconditionError("affine generator: eta must have one entry per Brownian coordinate");
    }
    AffineCoefficients c;
    c.g0 = g0.realize(tree);
    c.lambda = AdaptedProcess::constant(tree, lambda);
    for (double e : eta) {
        c.eta.push_back(AdaptedProcess::constant(tree, e));
    }
    return affine(std::move(c));
}

Generator Generator::frozen(AdaptedProcess costs) {
    auto c = std::make_shared<const AdaptedProcess>(std::move(costs));
    return Generator("frozen", [c](std::size_t k, std::size_t i, double, std::span<const double>) { return (*c)(k, i); },
                     0.0, 0.0, false);
}

Generator Generator::clipped_polynomial(const ScenarioTree& tree, const DriftSpec& g0, std::vector<double> coeffs,
                                        double radius, double z_coef) {
    if (!(radius > 0.0)) {
        throw PreconditionError("clipped_polynomial: radius must be positive");
    }
    double ly = 0.0;
    for (std::size_t j = 1; j < coeffs.size(); ++j) {
        ly += static_cast<double>(j) * std::fabs(coeffs[j]) * std::pow(radius, static_cast<double>(j) - 1.0);
    }
    const double lz = std::fabs(z_coef) * std::sqrt(static_cast<double>(tree.dim()));
    auto base = std::make_shared<const AdaptedProcess>(g0.realize(tree));
    // coeffs[j] multiplies clamp(y)^j; coeffs[0] is a constant offset.
    return Generator(
        "clipped_polynomial",
        [base, coeffs = std::move(coeffs), radius, z_coef](std::size_t k, std::size_t i, double y,
                                                           std::span<const double> z) {
            const double yc = std::clamp(y, -radius, radius);
            double v = (*base)(k, i);
            double pw = 1.0;
            for (double a : coeffs) {
                v += a * pw;
                pw *= yc;
            }
            for (double zi : z) {
                v += z_coef * std::clamp(zi, -radius, radius);
            }
            return v;
        },
        ly, lz, ly > 0.0 || lz > 0.0);
}

Generator Generator::lipschitz_trig(const ScenarioTree& tree, const DriftSpec& g0, double a, double b, double c) {
    auto base = std::make_shared<const AdaptedProcess>(g0.realize(tree));
    const double lz = std::fabs(b) * std::sqrt(static_cast<double>(tree.dim())) + std::fabs(c);
    return Generator(
        "lipschitz_trig",
        [base, a, b, c](std::size_t k, std::size_t i, double y, std::span<const double> z) {
            double v = (*base)(k, i) + a * std::sin(y);
            double sq = 0.0;
            for (double zi : z) {
                v += b * std::cos(zi);
                sq += zi * zi;
            }
            return v + c * std::sqrt(sq);
        },
        std::fabs(a), lz, a != 0.0 || lz > 0.0);
}

Generator Generator::table(AdaptedProcess g0, double lambda, std::vector<double> eta) {
    AffineCoefficients c;
    c.lambda = AdaptedProcess(g0) * 0.0;
    for (std::size_t k = 0; k <= c.lambda.n_steps(); ++k) {
        for (double& v : c.lambda.at(k)) {
            v = lambda;
        }
    }
    for (double e : eta) {
        AdaptedProcess p = c.lambda;
        for (std::size_t k = 0; k <= p.n_steps(); ++k) {
            for (double& v : p.at(k)) {
                v = e;
            }
        }
        c.eta.push_back(std::move(p));
    }
    c.g0 = std::move(g0);
    Generator g = affine(std::move(c));
    g.kind_ = "table";
    return g;
}

LipschitzProbe probe_lipschitz(const ScenarioTree& tree, const Generator& g, RandomSeed seed, std::size_t n_probes,
                               double radius) {
    auto rng = make_engine(seed);
    const std::size_t d = tree.dim();
    std::vector<double> z1(d);
    std::vector<double> z2(d);
    LipschitzProbe out;
    out.worst_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t probe = 0; probe < n_probes; ++probe) {
        const auto k = static_cast<std::size_t>(uniform(rng, 0.0, static_cast<double>(tree.n_steps())));
        const auto i = std::min(tree.nodes_at(k) - 1,
                                static_cast<std::size_t>(uniform(rng, 0.0, static_cast<double>(tree.nodes_at(k)))));
        const double y1 = uniform(rng, -radius, radius);
        const double y2 = uniform(rng, -radius, radius);
        double dz = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            z1[j] = uniform(rng, -radius, radius);
            z2[j] = uniform(rng, -radius, radius);
            dz += (z1[j] - z2[j]) * (z1[j] - z2[j]);
        }
        const double lhs = std::fabs(g(k, i, y1, z1) - g(k, i, y2, z2));
        const double rhs = g.l_y() * std::fabs(y1 - y2) + g.l_z() * std::sqrt(dz);
        out.worst_excess = std::max(out.worst_excess, lhs - rhs);
        ++out.probes;
    }
    out.pass = out.worst_excess <= 1e-9;
    return out;
}

}  // namespace bsdelab
