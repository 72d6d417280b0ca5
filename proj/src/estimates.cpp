#include "bsdelab/estimates.hpp"

#include "bsdelab/errors.hpp"
#include "bsdelab/martingale.hpp"
#include "bsdelab/norms.hpp"
#include "bsdelab/reflected.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace bsdelab {

const char* tier_name(CheckTier tier) noexcept {
    return tier == CheckTier::explicit_constant ? "explicit" : "empirical";
}

namespace {

double safe_ratio(double lhs, double rhs) {
    if (rhs > 0.0) {
        return lhs / rhs;
    }
    return lhs <= 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace

EstimateReport EstimateReport::make_explicit(std::string id, double lhs, double rhs, double constant,
                                             double rel_tol) {
    EstimateReport r;
    r.id = std::move(id);
    r.tier = CheckTier::explicit_constant;
    r.lhs = lhs;
    r.rhs = rhs;
    r.constant = constant;
    r.ratio = safe_ratio(lhs, rhs);
    r.vacuous = lhs == 0.0 && rhs == 0.0;
    const double scale = std::max({1.0, std::fabs(lhs), std::fabs(rhs)});
    r.pass = std::isfinite(lhs) && std::isfinite(rhs) && lhs <= rhs + rel_tol * scale;
    return r;
}

EstimateReport EstimateReport::make_empirical(std::string id, double lhs, double rhs) {
    EstimateReport r;
    r.id = std::move(id);
    r.tier = CheckTier::empirical;
    r.lhs = lhs;
    r.rhs = rhs;
    r.ratio = safe_ratio(lhs, rhs);
    r.vacuous = lhs <= 0.0 && rhs == 0.0;
    r.pass = std::isfinite(r.ratio);
    return r;
}

EstimateReport& EstimateReport::with(std::string key, double value) {
    details.emplace_back(std::move(key), value);
    return *this;
}

double EstimateReport::detail(const std::string& key) const {
    for (const auto& [k, v] : details) {
        if (k == key) {
            return v;
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

const char* branch_name(LemmaBranch b) noexcept {
    switch (b) {
        case LemmaBranch::k_bound: return "K-bound";
        case LemmaBranch::n_ge2: return "N-ge2";
        case LemmaBranch::n_lt2: return "N-lt2";
    }
    return "?";
}

namespace {

void require_nondecreasing(const ScenarioTree& tree, const AdaptedProcess& k, const char* who) {
    for (std::size_t s = 1; s <= tree.n_steps(); ++s) {
        for (std::size_t i = 0; i < tree.nodes_at(s); ++i) {
            if (k(s, i) < k(s - 1, tree.parent(s, i)) - 1e-12) {
                std::ostringstream os;
                os << who << ": K decreases at step " << s << ", node " << i;
                throw PreconditionError(os.str());
            }
        }
    }
    if (std::fabs(k(0, 0)) > 1e-12) {
        throw PreconditionError(std::string(who) + ": K_0 must vanish");
    }
}

void require_same_tree(const BsdeInstance& a, const BsdeInstance& b, const char* who) {
    if (a.tree.get() != b.tree.get() && !(*a.tree == *b.tree)) {
        throw PreconditionError(std::string(who) + ": instances live on different trees");
    }
}

std::uint64_t fingerprint_of(const ScenarioTree& tree, const SolutionQuadruple& sol) {
    std::uint64_t h = fnv1a(sol.y.at(0));
    return fnv1a(sol.y.at(tree.n_steps()), h);
}

/// Σ_k e^{rate t_{k+1}} a_k ΔB_{k+1} along every path, for a_k = f(step k, node).
std::vector<double> path_integral(const ScenarioTree& tree, double rate,
                                  const std::function<double(std::size_t, std::size_t)>& integrand,
                                  const AdaptedProcess& b) {
    return accumulate_paths(tree, 0.0, [&](std::size_t k, std::size_t i, double acc) {
        if (k == 0) {
            return acc;
        }
        const std::size_t par = tree.parent(k, i);
        return acc + std::exp(rate * tree.time(k)) * integrand(k - 1, par) * (b(k, i) - b(k - 1, par));
    });
}

double abs_power_mean(const ScenarioTree& tree, std::span<const double> leaf, double q) {
    return leaf_expectation(tree, leaf, [q](double v) { return std::pow(std::fabs(v), q); });
}

double mean(const ScenarioTree& tree, std::span<const double> leaf) {
    return leaf_expectation(tree, leaf, [](double v) { return v; });
}

AdaptedProcess abs_process(AdaptedProcess x, std::size_t n) {
    for (std::size_t k = 0; k <= n; ++k) {
        for (double& v : x.at(k)) {
            v = std::fabs(v);
        }
    }
    return x;
}

/// Prefactor e^{p(L_y+α/2)T + pκL_z²T/(2(κ−1))} (p/(p−1))^p times 6^{p−1} or 3^{p−1}.
double prop_ref_factor(double p, double alpha, double l_y, double l_z, double horizon, double kappa, bool six) {
    if (!(kappa > 1.0) || !(kappa < p)) {
        throw PreconditionError("check_prop_ref: kappa must lie in (1, p)");
    }
    const double expo = p * (l_y + 0.5 * alpha) * horizon + p * kappa / (2.0 * (kappa - 1.0)) * l_z * l_z * horizon;
    return std::exp(expo) * std::pow(six ? 6.0 : 3.0, p - 1.0) * std::pow(p / (p - 1.0), p);
}

}  // namespace

double integral_power(const ScenarioTree& tree, const AdaptedProcess& c, double p, double rate) {
    const double dt = tree.dt();
    const auto leaf = accumulate_paths(tree, 0.0, [&](std::size_t k, std::size_t i, double acc) {
        if (k == 0) {
            return acc;
        }
        return acc + std::exp(rate * tree.time(k)) * std::fabs(c(k - 1, tree.parent(k, i))) * dt;
    });
    return abs_power_mean(tree, leaf, p);
}

AdaptedProcess driver_gap(const BsdeInstance& inst1, const SolutionQuadruple& sol1, const BsdeInstance& inst2) {
    const ScenarioTree& tree = *inst1.tree;
    AdaptedProcess out = AdaptedProcess::zeros(tree);
    for (std::size_t k = 0; k < tree.n_steps(); ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            const double y = sol1.y(k, i);
            const auto z = sol1.z.at(k + 1, i);
            out(k, i) = inst1.g(k, i, y, z) - inst2.g(k, i, y, z);
        }
    }
    return out;
}

double norm_n(const ScenarioTree& tree, const SolutionQuadruple& sol, double p, double alpha,
              BracketConvention convention) {
    if (convention == BracketConvention::discrete) {
        return norm_m(tree, sol.n, p, alpha);
    }
    const double dt = tree.dt();
    const auto leaf = accumulate_paths(tree, 0.0, [&](std::size_t k, std::size_t i, double acc) {
        if (k == 0) {
            return acc;
        }
        const std::size_t par = tree.parent(k, i);
        double sq = 0.0;
        for (double v : sol.z.at(k, par)) {
            sq += v * v;
        }
        const double dl = (sol.m(k, i) - sol.m(k - 1, par)) - (sol.k(k, i) - sol.k(k - 1, par));
        return acc + std::exp(alpha * tree.time(k)) * (sq * dt + dl * dl);
    });
    return leaf_expectation(tree, leaf, [p](double v) { return std::pow(v, p / 2.0); });
}

EstimateReport check_theorem_main1(const BsdeInstance& instance, const SolutionQuadruple& sol, double p,
                                   double alpha) {
    NormConfig{p, alpha}.validate();
    const ScenarioTree& tree = *instance.tree;
    require_nondecreasing(tree, sol.k, "check_theorem_main1");
    const double zs = norm_h(tree, sol.z, p, alpha);
    const double ms = norm_m(tree, sol.m, p, alpha);
    const double ks = norm_i(tree, sol.k, p, alpha);
    const double xs = norm_lp(tree, instance.xi, p);
    const double ys = norm_sp(tree, sol.y, p);
    const double gs = norm_h1(tree, instance.g.g0(tree), p, alpha);
    auto rep = EstimateReport::make_empirical("main1", zs + ms + ks, xs + ys + gs);
    rep.fingerprint = fingerprint_of(tree, sol);
    rep.with("p", p).with("alpha", alpha).with("norm_Z", zs).with("norm_M", ms).with("norm_K", ks);
    rep.with("norm_xi", xs).with("norm_Y", ys).with("norm_g0", gs);
    return rep;
}

namespace {

EstimateReport ito_tree_report(const ScenarioTree& tree, const LadlagProcess& x, double p, double alpha);

EstimateReport lemma_k_bound(const BsdeInstance& instance, const SolutionQuadruple& sol, double p, double alpha) {
    const ScenarioTree& tree = *instance.tree;
    require_nondecreasing(tree, sol.k, "check_lemma_intermediate");
    const std::size_t n = tree.n_steps();
    const double horizon = tree.time(n);
    const double dt = tree.dt();
    const double l_y = instance.g.l_y();
    const double l_z = instance.g.l_z();
    const AdaptedProcess g0 = instance.g.g0(tree);

    const double u2 = power_upper_factor(2.0, p);
    const double u3 = power_upper_factor(3.0, p);
    const double c_meyer = ladlag_meyer_constant(p);
    const double constant = std::pow(c_meyer, p) * u2;

    const double ys = norm_sp(tree, sol.y, p, 0.5 * alpha);
    const double zs = norm_h(tree, sol.z, p, alpha);
    const double gs = norm_h1(tree, g0, p, alpha);
    const double rhs =
        constant * ((1.0 + u3 * std::pow(horizon, p) * std::pow(l_y + 0.5 * alpha, p)) * ys + u3 * (std::pow(l_z, p) * zs + gs));
    const double lhs = norm_i(tree, sol.k, p, alpha);

    // Discounted supermartingale X_k = e^{αt_k/2} Y_k − Σ_{j<k} c_j whose
    // compensator has increments e^{αt_{j+1}/2} ΔK_{j+1}.
    AdaptedProcess x = AdaptedProcess::zeros(tree);
    x(0, 0) = sol.y(0, 0);
    for (std::size_t k = 1; k <= n; ++k) {
        const double e1 = std::exp(0.5 * alpha * tree.time(k));
        const double e0 = std::exp(0.5 * alpha * tree.time(k - 1));
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            const std::size_t par = tree.parent(k, i);
            const double c = e1 * sol.driver(k - 1, par) * dt + (e1 - e0) * sol.y(k - 1, par);
            x(k, i) = x(k - 1, par) + e1 * sol.y(k, i) - e0 * sol.y(k - 1, par) - c;
        }
    }
    const auto doob = doob_decompose(tree, x);
    double comp_defect = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double e1 = std::exp(0.5 * alpha * tree.time(k));
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            const std::size_t par = tree.parent(k, i);
            const double da = doob.a(k, i) - doob.a(k - 1, par);
            const double dk = sol.k(k, i) - sol.k(k - 1, par);
            comp_defect = std::max(comp_defect, std::fabs(da - e1 * dk));
        }
    }
    const double x_norm = std::pow(norm_sp(tree, x, p), 1.0 / p);
    const double a_norm = std::pow(lhs, 1.0 / p);

    auto rep = EstimateReport::make_explicit("lemma21_K", lhs, rhs, constant);
    rep.fingerprint = fingerprint_of(tree, sol);
    rep.with("p", p).with("alpha", alpha).with("horizon", horizon).with("meyer_constant", c_meyer);
    rep.with("norm_eY", ys).with("norm_Z", zs).with("norm_g0", gs);
    rep.with("compensator_defect", comp_defect).with("meyer_link_lhs", a_norm).with("meyer_link_rhs", c_meyer * x_norm);
    return rep;
}

EstimateReport lemma_n_ge2(const BsdeInstance& instance, const SolutionQuadruple& sol, double p, double alpha,
                           const ProofParameters& prm) {
    if (p < 2.0) {
        throw PreconditionError("check_lemma_intermediate: branch N-ge2 needs p >= 2");
    }
    if (!(prm.eps > 0.0) || !(prm.eta > 0.0) || !(prm.eta < 1.0)) {
        throw PreconditionError("check_lemma_intermediate: needs eps > 0 and eta in (0, 1)");
    }
    const ScenarioTree& tree = *instance.tree;
    const double l_y = instance.g.l_y();
    const double l_z = instance.g.l_z();
    const double a_star = alpha_star(l_y, l_z, prm.eps, prm.eta);
    if (!(alpha > a_star)) {
        std::ostringstream os;
        os << "check_lemma_intermediate: alpha = " << alpha << " must exceed " << a_star;
        throw PreconditionError(os.str());
    }
    const double horizon = tree.time(tree.n_steps());
    const double c1 = std::pow(alpha - a_star, p / 2.0);
    const double c2 = std::pow(1.0 - prm.eta, p / 2.0);
    const AdaptedProcess l = sol.m - sol.k;
    const double lhs =
        c1 * norm_h1(tree, sol.y, p, alpha) + c2 * norm_h(tree, sol.z, p, alpha) + norm_m(tree, l, p, alpha);

    const double f = std::pow(3.0, p / 2.0 - 1.0);
    const double xs = norm_lp(tree, instance.xi, p);
    const double gs = norm_h1(tree, instance.g.g0(tree), p, alpha);
    const auto y_of = [&](std::size_t k, std::size_t i) { return sol.y(k, i); };
    double cross = 0.0;
    if (p > 2.0) {
        cross = abs_power_mean(tree, path_integral(tree, alpha, y_of, sol.n), p / 2.0);
    } else {
        cross = std::max(0.0, mean(tree, path_integral(tree, alpha, y_of, sol.k)));
    }
    const double rhs = f * (std::exp(p / 2.0 * alpha * horizon) * xs + std::pow(prm.eps, p / 2.0) * gs) +
                       f * std::pow(2.0, p / 2.0) * cross;
    auto rep = EstimateReport::make_explicit("lemma21_N_ge2", lhs, rhs, f);
    rep.fingerprint = fingerprint_of(tree, sol);
    rep.with("p", p).with("alpha", alpha).with("alpha_star", a_star).with("eps", prm.eps).with("eta", prm.eta);
    rep.with("C1", c1).with("C2", c2).with("cross_term", cross);
    return rep;
}

EstimateReport lemma_n_lt2(const BsdeInstance& instance, const SolutionQuadruple& sol, double p, double alpha,
                           const ProofParameters& prm) {
    if (!(p > 1.0) || !(p < 2.0)) {
        throw PreconditionError("check_lemma_intermediate: branch N-lt2 needs p in (1, 2)");
    }
    const ScenarioTree& tree = *instance.tree;
    const double beta = prm.beta_for(p);
    if (!(beta > 0.0) || !(beta < p * (p - 1.0) / 2.0)) {
        throw PreconditionError("check_lemma_intermediate: beta must lie in (0, p(p-1)/2)");
    }
    const double l_y = instance.g.l_y();
    const double l_z = instance.g.l_z();
    const double alpha_min = 2.0 * l_y + p * l_z * l_z / (2.0 * beta);
    if (alpha < alpha_min) {
        std::ostringstream os;
        os << "check_lemma_intermediate: alpha = " << alpha << " must be at least " << alpha_min;
        throw PreconditionError(os.str());
    }
    const double ns = norm_m(tree, sol.n, p, alpha);
    const double xs = norm_lp(tree, instance.xi, p);
    const double ys = norm_sp(tree, sol.y, p, 0.5 * alpha);
    const double gs = norm_h1(tree, instance.g.g0(tree), p, alpha);
    const auto phi_y = [&](std::size_t k, std::size_t i) { return phi_p(sol.y(k, i), p); };
    const double k_term = std::max(0.0, mean(tree, path_integral(tree, p * alpha / 2.0, phi_y, sol.k)));

    // Jump term Σ e^{pαs/2}|ΔN|²(|Y_−|² ∨ |Y_− + ΔN|²)^{p/2−1} and the path-wise
    // p-power inequality for the càdlàg embedding of Y.
    const auto jumps = accumulate_paths(tree, 0.0, [&](std::size_t k, std::size_t i, double acc) {
        if (k == 0) {
            return acc;
        }
        const std::size_t par = tree.parent(k, i);
        const double a = sol.y(k - 1, par);
        const double dn = sol.n(k, i) - sol.n(k - 1, par);
        const double b = a + dn;
        const double big = std::max(std::fabs(a), std::fabs(b));
        if (big == 0.0) {
            return acc;
        }
        return acc + p * (p - 1.0) / 2.0 * std::exp(p * alpha / 2.0 * tree.time(k)) * dn * dn * std::pow(big, p - 2.0);
    });
    double jump_min = std::numeric_limits<double>::infinity();
    for (double v : jumps) {
        jump_min = std::min(jump_min, v);
    }
    const auto ito = ito_tree_report(tree, LadlagProcess::from_cadlag(tree, sol.y), p, alpha);

    const double rhs = prm.eps * gs + xs + ys + k_term;
    auto rep = EstimateReport::make_empirical("lemma21_N_lt2", ns, rhs);
    rep.fingerprint = fingerprint_of(tree, sol);
    rep.with("p", p).with("alpha", alpha).with("alpha_min", alpha_min).with("beta", beta);
    rep.with("jump_term", mean(tree, jumps)).with("jump_term_min", jump_min);
    rep.with("ito_excess", ito.lhs - ito.rhs).with("ito_pass", ito.pass ? 1.0 : 0.0);
    rep.pass = rep.pass && jump_min >= 0.0 && ito.pass;
    return rep;
}

}  // namespace

EstimateReport check_lemma_intermediate(const BsdeInstance& instance, const SolutionQuadruple& sol, double p,
                                        double alpha, LemmaBranch branch, const ProofParameters& params) {
    NormConfig{p, alpha}.validate();
    switch (branch) {
        case LemmaBranch::k_bound: return lemma_k_bound(instance, sol, p, alpha);
        case LemmaBranch::n_ge2: return lemma_n_ge2(instance, sol, p, alpha, params);
        case LemmaBranch::n_lt2: return lemma_n_lt2(instance, sol, p, alpha, params);
    }
    throw PreconditionError("check_lemma_intermediate: unknown branch");
}

EstimateReport check_theorem_main2(const BsdeInstance& inst1, const SolutionQuadruple& sol1,
                                   const BsdeInstance& inst2, const SolutionQuadruple& sol2, double p,
                                   double alpha) {
    NormConfig{p, alpha}.validate();
    require_same_tree(inst1, inst2, "check_theorem_main2");
    const ScenarioTree& tree = *inst1.tree;
    require_nondecreasing(tree, sol1.k, "check_theorem_main2");
    require_nondecreasing(tree, sol2.k, "check_theorem_main2");
    const SolutionDiff d = solution_diff(tree, sol1, sol2);
    const double zs = norm_h(tree, d.dz, p, alpha);
    const double ls = norm_m(tree, d.dm - d.dk, p, alpha);
    std::vector<double> dxi(tree.leaves());
    for (std::size_t l = 0; l < dxi.size(); ++l) {
        dxi[l] = inst1.xi[l] - inst2.xi[l];
    }
    const double xs = norm_lp(tree, dxi, p);
    const double ys = norm_sp(tree, d.dy, p);
    const double q = std::min(p / 2.0, p - 1.0);
    const double yq = std::pow(ys, q / p);
    const double gs = norm_h1(tree, driver_gap(inst1, sol1, inst2), p, alpha);
    auto rep = EstimateReport::make_empirical("main2", zs + ls, xs + ys + yq + gs);
    rep.fingerprint = fingerprint_of(tree, sol1) ^ (fingerprint_of(tree, sol2) << 1);
    rep.with("p", p).with("alpha", alpha).with("norm_dZ", zs).with("norm_dL", ls).with("norm_dxi", xs);
    rep.with("norm_dY", ys).with("norm_dY_q", yq).with("norm_dg", gs);
    return rep;
}

EstimateReport check_prop_ref(const BsdeInstance& instance, const SolutionQuadruple& sol,
                              const SolutionQuadruple& unconstrained, double p, double alpha,
                              ObstacleVariant variant, const ProofParameters& params) {
    NormConfig{p, alpha}.validate();
    if (!instance.obstacle) {
        throw PreconditionError("check_prop_ref: instance has no obstacle");
    }
    const ScenarioTree& tree = *instance.tree;
    const std::size_t n = tree.n_steps();
    const double horizon = tree.time(n);
    const double l_y = instance.g.l_y();
    const double l_z = instance.g.l_z();
    const bool plus = variant == ObstacleVariant::s_plus;
    const double factor = prop_ref_factor(p, alpha, l_y, l_z, horizon, params.kappa_for(p), plus);

    AdaptedProcess s = *instance.obstacle;
    for (std::size_t k = 0; k <= n; ++k) {
        for (double& v : s.at(k)) {
            v = plus ? std::max(v, 0.0) : std::fabs(v);
        }
    }
    const double g_term = integral_power(tree, instance.g.g0(tree), p, l_y);
    const double s_term = norm_sp(tree, s, p, l_y);
    const double xi_term = std::exp(p * l_y * horizon) * norm_lp(tree, instance.xi, p);
    const double y_term = plus ? std::pow(2.0, p - 1.0) * norm_sp(tree, unconstrained.y, p, 0.5 * alpha) : 0.0;
    const double rhs = factor * (g_term + s_term + xi_term) + y_term;
    const double lhs = norm_sp(tree, sol.y, p, 0.5 * alpha);

    auto rep = EstimateReport::make_explicit(plus ? "prop32_S_plus" : "prop32_S", lhs, rhs, factor);
    rep.fingerprint = fingerprint_of(tree, sol);
    rep.with("p", p).with("alpha", alpha).with("kappa", params.kappa_for(p)).with("g_term", g_term);
    rep.with("s_term", s_term).with("xi_term", xi_term).with("unconstrained_term", y_term);
    return rep;
}

EstimateReport check_prop_ref_stability(const BsdeInstance& inst1, const SolutionQuadruple& sol1,
                                        const BsdeInstance& inst2, const SolutionQuadruple& sol2, double p,
                                        double alpha, const ProofParameters& params) {
    NormConfig{p, alpha}.validate();
    require_same_tree(inst1, inst2, "check_prop_ref_stability");
    if (!inst1.obstacle || !inst2.obstacle) {
        throw PreconditionError("check_prop_ref_stability: both instances need an obstacle");
    }
    const ScenarioTree& tree = *inst1.tree;
    const std::size_t n = tree.n_steps();
    const double horizon = tree.time(n);
    const double l_y = std::max(inst1.g.l_y(), inst2.g.l_y());
    const double l_z = std::max(inst1.g.l_z(), inst2.g.l_z());
    const double factor = prop_ref_factor(p, alpha, l_y, l_z, horizon, params.kappa_for(p), false);

    const AdaptedProcess ds = abs_process(*inst1.obstacle - *inst2.obstacle, n);
    std::vector<double> dxi(tree.leaves());
    for (std::size_t l = 0; l < dxi.size(); ++l) {
        dxi[l] = inst1.xi[l] - inst2.xi[l];
    }
    const double g_term = integral_power(tree, driver_gap(inst1, sol1, inst2), p, l_y);
    const double s_term = norm_sp(tree, ds, p, l_y);
    const double xi_term = std::exp(p * l_y * horizon) * norm_lp(tree, dxi, p);
    const double rhs = factor * (g_term + s_term + xi_term);
    const double lhs = norm_sp(tree, sol1.y - sol2.y, p, 0.5 * alpha);
    auto rep = EstimateReport::make_explicit("prop32_stability", lhs, rhs, factor);
    rep.fingerprint = fingerprint_of(tree, sol1) ^ (fingerprint_of(tree, sol2) << 1);
    rep.with("p", p).with("alpha", alpha).with("g_term", g_term).with("s_term", s_term).with("xi_term", xi_term);
    return rep;
}

EstimateReport check_prop_rbsde_p2(const BsdeInstance& inst1, const SolutionQuadruple& sol1,
                                   const BsdeInstance& inst2, const SolutionQuadruple& sol2, double alpha,
                                   double eps) {
    require_same_tree(inst1, inst2, "check_prop_rbsde_p2");
    if (!inst1.obstacle || !inst2.obstacle) {
        throw PreconditionError("check_prop_rbsde_p2: both instances need an obstacle");
    }
    if (!(eps > 0.0)) {
        throw PreconditionError("check_prop_rbsde_p2: eps must be positive");
    }
    const ScenarioTree& tree = *inst1.tree;
    require_nondecreasing(tree, sol1.k, "check_prop_rbsde_p2");
    require_nondecreasing(tree, sol2.k, "check_prop_rbsde_p2");
    const double p = 2.0;
    const SolutionDiff d = solution_diff(tree, sol1, sol2);
    const AdaptedProcess ds = *inst1.obstacle - *inst2.obstacle;

    const double lhs = norm_h1(tree, d.dy, p, alpha) + norm_h(tree, d.dz, p, alpha) + norm_m(tree, d.dm - d.dk, p, alpha);
    const double g_term = norm_h1(tree, driver_gap(inst1, sol1, inst2), p, alpha);
    std::vector<double> dxi(tree.leaves());
    for (std::size_t l = 0; l < dxi.size(); ++l) {
        dxi[l] = inst1.xi[l] - inst2.xi[l];
    }
    const double xi_term = norm_lp(tree, dxi, p);
    const double s_norm = std::sqrt(norm_sp(tree, ds, p, 0.5 * alpha));
    const double reduced = lhs - eps * g_term;

    // Skorokhod consequence: Σ e^{αt}(δY − δS)_− ΔδK ≤ 0 on every path.
    const auto excess = path_integral(
        tree, alpha, [&](std::size_t k, std::size_t i) { return d.dy(k, i) - ds(k, i); }, d.dk);
    double worst = -std::numeric_limits<double>::infinity();
    for (double v : excess) {
        worst = std::max(worst, v);
    }
    const double cs_lhs =
        mean(tree, path_integral(tree, alpha, [&](std::size_t k, std::size_t i) { return ds(k, i); }, d.dk));
    const double cs_rhs = s_norm * std::sqrt(norm_i(tree, d.dk, p, alpha));
    const double scale = std::max({1.0, std::fabs(cs_lhs), std::fabs(cs_rhs)});

    auto rep = EstimateReport::make_empirical("prop33", std::max(0.0, reduced), xi_term + s_norm);
    rep.fingerprint = fingerprint_of(tree, sol1) ^ (fingerprint_of(tree, sol2) << 1);
    rep.with("alpha", alpha).with("eps", eps).with("lhs_full", lhs).with("eps_g_term", eps * g_term);
    rep.with("pathwise_excess", worst).with("cs_lhs", cs_lhs).with("cs_rhs", cs_rhs);
    const bool exact_ok = worst <= 1e-12 * scale && cs_lhs <= cs_rhs + 1e-9 * scale;
    rep.with("exact_checks_pass", exact_ok ? 1.0 : 0.0);
    rep.pass = rep.pass && exact_ok;
    return rep;
}

ItoPathSides ito_p_path(std::span<const double> times, std::span<const double> left,
                        std::span<const double> value, std::span<const double> right, double p, double alpha,
                        std::size_t start) {
    const std::size_t n1 = times.size();
    if (n1 == 0 || left.size() != n1 || value.size() != n1 || right.size() != n1 || start >= n1) {
        throw PreconditionError("ito_p_path: inconsistent path arrays");
    }
    const std::size_t n = n1 - 1;
    for (std::size_t k = 0; k < n; ++k) {
        if (std::fabs(left[k + 1] - right[k]) > 1e-12 * std::max(1.0, std::fabs(right[k]))) {
            throw PreconditionError("ito_p_path: path must be constant between grid points");
        }
    }
    if (std::fabs(right[n] - value[n]) > 1e-12 * std::max(1.0, std::fabs(value[n]))) {
        throw PreconditionError("ito_p_path: the right limit at T must equal the value");
    }
    const auto w = [&](std::size_t k) { return std::exp(p * alpha / 2.0 * times[k]); };
    const auto absp = [p](double v) { return std::pow(std::fabs(v), p); };

    ItoPathSides out;
    out.lhs = w(start) * absp(value[start]);
    double drift = 0.0;
    for (std::size_t k = start; k < n; ++k) {
        drift += absp(right[k]) * (w(k + 1) - w(k));
    }
    // Right jump at the start, then the full jump X_{s−} → X_{s+} at each later grid time.
    double integral = w(start) * phi_p(value[start], p) * (right[start] - value[start]);
    double jumps = 0.0;
    for (std::size_t k = start + 1; k <= n; ++k) {
        const double a = left[k];
        const double b = right[k];
        integral += w(k) * phi_p(a, p) * (b - a);
        const double big = std::max(std::fabs(a), std::fabs(b));
        if (big != 0.0) {
            jumps += p * (p - 1.0) / 2.0 * w(k) * (b - a) * (b - a) * std::pow(big, p - 2.0);
        }
    }
    out.jump_term = jumps;
    out.rhs = w(n) * absp(value[n]) - drift - p * integral - jumps;
    return out;
}

namespace {

EstimateReport ito_tree_report(const ScenarioTree& tree, const LadlagProcess& x, double p, double alpha) {
    const std::size_t n = tree.n_steps();
    std::vector<double> times(n + 1), left(n + 1), value(n + 1), right(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        times[k] = tree.time(k);
    }
    ItoPathSides worst{};
    double worst_gap = -std::numeric_limits<double>::infinity();
    double min_jump = std::numeric_limits<double>::infinity();
    std::size_t checked = 0;
    for (std::size_t leaf = 0; leaf < tree.leaves(); ++leaf) {
        for (std::size_t k = 0; k <= n; ++k) {
            const std::size_t node = tree.ancestor(leaf, k);
            left[k] = x.left(k, node);
            value[k] = x.value(k, node);
            right[k] = x.right(k, node);
        }
        left[0] = value[0];
        for (std::size_t s = 0; s <= n; ++s) {
            const auto sides = ito_p_path(times, left, value, right, p, alpha, s);
            const double scale = std::max({1.0, std::fabs(sides.lhs), std::fabs(sides.rhs)});
            const double gap = (sides.lhs - sides.rhs) / scale;
            min_jump = std::min(min_jump, sides.jump_term);
            ++checked;
            if (gap > worst_gap) {
                worst_gap = gap;
                worst = sides;
            }
        }
    }
    auto rep = EstimateReport::make_explicit("ito_p", worst.lhs, worst.rhs, p * (p - 1.0) / 2.0);
    rep.with("p", p).with("alpha", alpha).with("paths_times_checked", static_cast<double>(checked));
    rep.with("worst_relative_gap", worst_gap).with("min_jump_term", min_jump);
    return rep;
}

}  // namespace

EstimateReport check_ito_p_inequality(const ScenarioTree& tree, const LadlagProcess& x, double p, double alpha) {
    if (!(p > 1.0) || !(p < 2.0)) {
        throw PreconditionError("check_ito_p_inequality: p must lie in (1, 2)");
    }
    if (!(alpha > 0.0)) {
        throw PreconditionError("check_ito_p_inequality: alpha must be positive");
    }
    return ito_tree_report(tree, x, p, alpha);
}

EstimateReport check_remark_equiv(const ScenarioTree& tree, const SolutionQuadruple& sol, double p, double alpha,
                                  BracketConvention convention) {
    NormConfig{p, alpha}.validate();
    const std::size_t n = tree.n_steps();
    const double horizon = tree.time(n);
    const double lo = power_lower_factor(2.0, p / 2.0);
    const double hi = power_upper_factor(2.0, p / 2.0);

    const double zs = norm_h(tree, sol.z, p, alpha);
    const double ms = norm_m(tree, sol.m, p, alpha);
    const double ls = norm_m(tree, sol.m - sol.k, p, alpha);
    const double ns = norm_n(tree, sol, p, alpha, convention);

    // ‖M + Z⋆W‖ under the same convention as ‖N‖.
    double mzw = 0.0;
    if (convention == BracketConvention::discrete) {
        mzw = norm_m(tree, sol.m + stochastic_integral(tree, sol.z), p, alpha);
    } else {
        SolutionQuadruple no_k = sol;
        no_k.k = AdaptedProcess::zeros(tree);
        mzw = norm_n(tree, no_k, p, alpha, BracketConvention::orthogonal);
    }

    bool k_monotone = true;
    for (std::size_t s = 1; s <= n && k_monotone; ++s) {
        for (std::size_t i = 0; i < tree.nodes_at(s); ++i) {
            if (sol.k(s, i) < sol.k(s - 1, tree.parent(s, i)) - 1e-12) {
                k_monotone = false;
                break;
            }
        }
    }
    const double ks = norm_i(tree, sol.k, p, alpha);
    const double c26 = std::max(std::pow(2.0, p / 2.0), std::pow(2.0, p - 1.0));

    struct Side {
        const char* name;
        double l;
        double r;
    };
    std::vector<Side> sides = {
        {"eq25_lower", lo * (zs + ls), ns},
        {"eq25_upper", ns, hi * (zs + ls)},
        {"eq26_lower", lo * (ms + zs), mzw},
    };
    if (k_monotone) {
        sides.push_back({"eq26_upper", mzw, c26 * (ns + std::exp(alpha * p * horizon / 2.0) * ks)});
    }

    // Martingale property of Σ e^{pαt_{k+1}/2} φ_p(Y_k)(ΔM + Z·ΔW).
    double mart_defect = 0.0;
    double mart_scale = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double w = std::exp(p * alpha / 2.0 * tree.time(k + 1));
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            const double phi = phi_p(sol.y(k, i), p);
            const auto z = sol.z.at(k + 1, i);
            const std::size_t c0 = tree.first_child(k, i);
            double acc = 0.0;
            for (std::size_t c = c0; c < c0 + tree.n_children(k, i); ++c) {
                const auto dw = tree.dw(k + 1, c);
                double zdw = 0.0;
                for (std::size_t j = 0; j < z.size(); ++j) {
                    zdw += z[j] * dw[j];
                }
                const double inc = w * phi * ((sol.m(k + 1, c) - sol.m(k, i)) + zdw);
                mart_scale = std::max(mart_scale, std::fabs(inc));
                acc += tree.prob(k + 1, c) * inc;
            }
            mart_defect = std::max(mart_defect, std::fabs(acc));
        }
    }

    std::size_t worst_idx = 0;
    double worst_gap = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < sides.size(); ++s) {
        const double scale = std::max({1.0, std::fabs(sides[s].l), std::fabs(sides[s].r)});
        const double gap = (sides[s].l - sides[s].r) / scale;
        if (gap > worst_gap) {
            worst_gap = gap;
            worst_idx = s;
        }
    }
    auto rep = EstimateReport::make_explicit("remark21", sides[worst_idx].l, sides[worst_idx].r, c26);
    rep.fingerprint = fingerprint_of(tree, sol);
    rep.with("p", p).with("alpha", alpha).with("discrete_bracket", convention == BracketConvention::discrete ? 1.0 : 0.0);
    for (const auto& s : sides) {
        rep.with(std::string(s.name) + "_lhs", s.l).with(std::string(s.name) + "_rhs", s.r);
    }
    rep.with("martingale_defect", mart_defect).with("k_monotone", k_monotone ? 1.0 : 0.0);
    rep.with("worst_relative_gap", worst_gap);
    rep.pass = rep.pass && mart_defect <= 1e-12 * mart_scale;
    return rep;
}

}  // namespace bsdelab
