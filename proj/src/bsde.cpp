#include "bsdelab/bsde.hpp"

#include "bsdelab/errors.hpp"
#include "bsdelab/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bsdelab {

const char* scheme_name(Scheme s) noexcept {
    return s == Scheme::explicit_step ? "explicit" : "implicit";
}

void BsdeInstance::validate() const {
    if (!tree) {
        throw PreconditionError("instance has no tree");
    }
    if (xi.size() != tree->leaves()) {
        throw PreconditionError("terminal condition must have one value per leaf");
    }
    if (obstacle && !obstacle->same_shape(*tree)) {
        throw PreconditionError("obstacle does not match the tree");
    }
}

SolutionQuadruple zero_solution(const ScenarioTree& tree) {
    SolutionQuadruple s;
    s.y = AdaptedProcess::zeros(tree);
    s.z = PredictableProcess::zeros(tree, tree.dim());
    s.m = s.y;
    s.k = s.y;
    s.n = s.y;
    s.driver = s.y;
    return s;
}

namespace detail {

void complete_solution(const ScenarioTree& tree, SolutionQuadruple& sol) {
    const std::size_t d = tree.dim();
    const double dt = tree.dt();
    sol.z = PredictableProcess::zeros(tree, d);
    sol.m = AdaptedProcess::zeros(tree);
    sol.n = AdaptedProcess::zeros(tree);
    auto& diag = sol.diagnostics;
    diag.dynamics_residual = 0.0;
    diag.orthogonality = 0.0;
    diag.martingale_defect = 0.0;
    std::vector<double> zbuf(d);
    std::vector<double> cross(d);
    for (std::size_t k = 0; k < tree.n_steps(); ++k) {
        const auto ey = conditional_expectation(tree, sol.y.at(k + 1), k);
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            projection_on_increment(tree, sol.y.at(k + 1), k, i, zbuf);
            std::copy(zbuf.begin(), zbuf.end(), sol.z.at(k + 1, i).begin());
            const std::size_t c0 = tree.first_child(k, i);
            double mean = 0.0;
            std::fill(cross.begin(), cross.end(), 0.0);
            for (std::size_t c = c0; c < c0 + tree.n_children(k, i); ++c) {
                const auto dw = tree.dw(k + 1, c);
                double zdw = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    zdw += zbuf[j] * dw[j];
                }
                const double dm = sol.y(k + 1, c) - ey[i] - zdw;
                const double dk = sol.k(k + 1, c) - sol.k(k, i);
                sol.m(k + 1, c) = sol.m(k, i) + dm;
                sol.n(k + 1, c) = sol.n(k, i) + zdw + dm - dk;
                const double pc = tree.prob(k + 1, c);
                mean += pc * dm;
                for (std::size_t j = 0; j < d; ++j) {
                    cross[j] += pc * dm * dw[j];
                }
                const double rebuilt = sol.y(k + 1, c) - sol.driver(k, i) * dt - zdw - dm + dk;
                diag.dynamics_residual = std::max(diag.dynamics_residual, std::fabs(sol.y(k, i) - rebuilt));
            }
            diag.martingale_defect = std::max(diag.martingale_defect, std::fabs(mean));
            for (double v : cross) {
                diag.orthogonality = std::max(diag.orthogonality, std::fabs(v));
            }
        }
    }
}

SolutionQuadruple backward_induction(const BsdeInstance& instance, Scheme scheme, const AdaptedProcess* obstacle,
                                     const SolveOptions& options) {
    instance.validate();
    const ScenarioTree& tree = *instance.tree;
    const std::size_t n = tree.n_steps();
    const std::size_t d = tree.dim();
    const double dt = tree.dt();
    const Generator& g = instance.g;
    if (dt * g.l_y() >= 1.0) {
        std::ostringstream os;
        os << "step-size precondition violated: dt*L_y = " << dt * g.l_y() << " must be below 1";
        throw PreconditionError(os.str());
    }

    SolutionQuadruple sol;
    sol.y = AdaptedProcess::zeros(tree);
    sol.k = AdaptedProcess::zeros(tree);
    sol.driver = AdaptedProcess::zeros(tree);
    sol.diagnostics.contraction_factor = dt * g.l_y();
    std::copy(instance.xi.begin(), instance.xi.end(), sol.y.at(n).begin());
    if (obstacle) {
        for (std::size_t i = 0; i < tree.leaves(); ++i) {
            if ((*obstacle)(n, i) > instance.xi[i]) {
                throw PreconditionError("obstacle exceeds the terminal condition at the horizon");
            }
        }
    }

    // ΔK_{k+1} per step-k node.
    std::vector<std::vector<double>> dk(n);
    std::vector<double> zbuf(d);
    for (std::size_t kk = n; kk-- > 0;) {
        const auto ey = conditional_expectation(tree, sol.y.at(kk + 1), kk);
        dk[kk].assign(tree.nodes_at(kk), 0.0);
        for (std::size_t i = 0; i < tree.nodes_at(kk); ++i) {
            projection_on_increment(tree, sol.y.at(kk + 1), kk, i, zbuf);
            const double s = obstacle ? (*obstacle)(kk, i) : -std::numeric_limits<double>::infinity();
            double yhat = ey[i];
            if (scheme == Scheme::implicit_step) {
                double y = std::max(s, ey[i]);
                std::size_t it = 0;
                for (;; ++it) {
                    if (it >= options.max_inner) {
                        const double next = std::max(s, ey[i] - g(kk, i, y, zbuf) * dt);
                        std::ostringstream os;
                        os << "implicit step did not converge at step " << kk << ", node " << i << " after "
                           << options.max_inner << " iterations";
                        throw ConvergenceError(os.str(), std::fabs(next - y));
                    }
                    const double next = std::max(s, ey[i] - g(kk, i, y, zbuf) * dt);
                    const double delta = std::fabs(next - y);
                    y = next;
                    if (delta <= options.inner_tol * std::max(1.0, std::fabs(y))) {
                        break;
                    }
                }
                sol.diagnostics.max_inner_iterations = std::max(sol.diagnostics.max_inner_iterations, it + 1);
                yhat = y;
            }
            const double gv = g(kk, i, yhat, zbuf);
            const double ytilde = ey[i] - gv * dt;
            const double yk = std::max(s, ytilde);
            sol.y(kk, i) = yk;
            sol.driver(kk, i) = gv;
            dk[kk][i] = yk - ytilde;
        }
    }
    for (std::size_t kk = 0; kk < n; ++kk) {
        for (std::size_t i = 0; i < tree.nodes_at(kk); ++i) {
            const std::size_t c0 = tree.first_child(kk, i);
            for (std::size_t c = c0; c < c0 + tree.n_children(kk, i); ++c) {
                sol.k(kk + 1, c) = sol.k(kk, i) + dk[kk][i];
            }
        }
    }
    complete_solution(tree, sol);
    return sol;
}

}  // namespace detail

SolutionQuadruple solve_bsde(const BsdeInstance& instance, Scheme scheme, const SolveOptions& options) {
    return detail::backward_induction(instance, scheme, nullptr, options);
}

SolutionQuadruple solve_linear_bsde(const BsdeInstance& instance) {
    instance.validate();
    const AffineCoefficients* coef = instance.g.affine();
    if (!coef) {
        throw PreconditionError("solve_linear_bsde needs an affine generator");
    }
    const ScenarioTree& tree = *instance.tree;
    const std::size_t n = tree.n_steps();
    const std::size_t d = tree.dim();
    const double dt = tree.dt();
    if (coef->eta.size() != d) {
        throw PreconditionError("affine generator has the wrong number of eta coordinates");
    }

    PredictableProcess eta = PredictableProcess::zeros(tree, d);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                eta.at(k + 1, i)[j] = coef->eta[j](k, i);
            }
        }
    }
    const MeasureChange q = girsanov_change(tree, eta);

    AdaptedProcess disc = AdaptedProcess::constant(tree, 1.0);
    AdaptedProcess cum = AdaptedProcess::zeros(tree);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            const double factor = 1.0 + coef->lambda(k, i) * dt;
            if (!(factor > 0.0)) {
                throw PreconditionError("solve_linear_bsde: 1 + lambda*dt must be positive");
            }
            const std::size_t c0 = tree.first_child(k, i);
            for (std::size_t c = c0; c < c0 + tree.n_children(k, i); ++c) {
                disc(k + 1, c) = disc(k, i) / factor;
                cum(k + 1, c) = cum(k, i) + disc(k + 1, c) * coef->g0(k, i) * dt;
            }
        }
    }
    std::vector<double> weighted(tree.leaves());
    for (std::size_t l = 0; l < tree.leaves(); ++l) {
        weighted[l] = tree.path_prob(n, l) * q.density(n, l) * (disc(n, l) * instance.xi[l] - cum(n, l));
    }

    SolutionQuadruple sol;
    sol.y = AdaptedProcess::zeros(tree);
    sol.k = AdaptedProcess::zeros(tree);
    sol.driver = AdaptedProcess::zeros(tree);
    for (std::size_t k = 0; k <= n; ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            double s = 0.0;
            for (std::size_t l = tree.leaf_begin(k, i); l < tree.leaf_end(k, i); ++l) {
                s += weighted[l];
            }
            const double eq = s / (tree.path_prob(k, i) * q.density(k, i));
            sol.y(k, i) = (eq + cum(k, i)) / disc(k, i);
        }
    }
    std::copy(instance.xi.begin(), instance.xi.end(), sol.y.at(n).begin());
    std::vector<double> zbuf(d);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            projection_on_increment(tree, sol.y.at(k + 1), k, i, zbuf);
            sol.driver(k, i) = instance.g(k, i, sol.y(k, i), zbuf);
        }
    }
    detail::complete_solution(tree, sol);
    return sol;
}

SolutionDiff solution_diff(const ScenarioTree& tree, const SolutionQuadruple& a, const SolutionQuadruple& b) {
    if (!a.y.same_shape(tree) || !b.y.same_shape(tree) || a.z.dim() != b.z.dim()) {
        throw PreconditionError("solution_diff: solutions live on different trees");
    }
    SolutionDiff out;
    out.dy = a.y - b.y;
    out.dm = a.m - b.m;
    out.dk = a.k - b.k;
    out.dn = a.n - b.n;
    out.dz = PredictableProcess::zeros(tree, a.z.dim());
    for (std::size_t k = 1; k <= tree.n_steps(); ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k - 1); ++i) {
            const auto za = a.z.at(k, i);
            const auto zb = b.z.at(k, i);
            auto dz = out.dz.at(k, i);
            for (std::size_t j = 0; j < dz.size(); ++j) {
                dz[j] = za[j] - zb[j];
            }
        }
    }
    out.tv_dk = AdaptedProcess::zeros(tree);
    for (std::size_t k = 1; k <= tree.n_steps(); ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            const std::size_t par = tree.parent(k, i);
            out.tv_dk(k, i) = out.tv_dk(k - 1, par) + std::fabs(out.dk(k, i) - out.dk(k - 1, par));
        }
    }
    return out;
}

}  // namespace bsdelab
