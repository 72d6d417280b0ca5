#include "bsdelab/martingale.hpp"

#include "bsdelab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bsdelab {

namespace {

double max_abs(const ScenarioTree& tree, const AdaptedProcess& x) {
    double m = 0.0;
    for (std::size_t k = 0; k <= tree.n_steps(); ++k) {
        for (double v : x.at(k)) {
            m = std::max(m, std::fabs(v));
        }
    }
    return m;
}

void require_shape(const ScenarioTree& tree, const AdaptedProcess& x, const char* what) {
    if (!x.same_shape(tree)) {
        throw PreconditionError(std::string(what) + ": process does not match the tree");
    }
}

}  // namespace

MartingaleDefect martingale_defect(const ScenarioTree& tree, const AdaptedProcess& x) {
    require_shape(tree, x, "martingale_defect");
    MartingaleDefect worst;
    for (std::size_t k = 0; k < tree.n_steps(); ++k) {
        const auto e = conditional_expectation(tree, x.at(k + 1), k);
        for (std::size_t i = 0; i < e.size(); ++i) {
            const double d = std::fabs(e[i] - x(k, i));
            if (d > worst.defect) {
                worst = {d, k, i};
            }
        }
    }
    return worst;
}

RepresentationPair represent_martingale(const ScenarioTree& tree, const AdaptedProcess& n, double tol) {
    require_shape(tree, n, "represent_martingale");
    const auto defect = martingale_defect(tree, n);
    if (defect.defect > tol * std::max(1.0, max_abs(tree, n))) {
        std::ostringstream os;
        os << "represent_martingale: input is not a martingale; worst node (step " << defect.step << ", node "
           << defect.node << ") has defect " << defect.defect;
        throw MartingaleDefectError(os.str(), defect.step, defect.node, defect.defect);
    }
    const std::size_t d = tree.dim();
    RepresentationPair rep;
    rep.z = PredictableProcess::zeros(tree, d);
    rep.m = AdaptedProcess::zeros(tree);
    std::vector<double> zbuf(d);
    for (std::size_t k = 0; k < tree.n_steps(); ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            projection_on_increment(tree, n.at(k + 1), k, i, zbuf);
            std::copy(zbuf.begin(), zbuf.end(), rep.z.at(k + 1, i).begin());
            const std::size_t c0 = tree.first_child(k, i);
            double mean = 0.0;
            std::vector<double> cross(d, 0.0);
            for (std::size_t c = c0; c < c0 + tree.n_children(k, i); ++c) {
                const auto dw = tree.dw(k + 1, c);
                double zdw = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    zdw += zbuf[j] * dw[j];
                }
                const double dm = n(k + 1, c) - n(k, i) - zdw;
                rep.m(k + 1, c) = rep.m(k, i) + dm;
                mean += tree.prob(k + 1, c) * dm;
                for (std::size_t j = 0; j < d; ++j) {
                    cross[j] += tree.prob(k + 1, c) * dm * dw[j];
                }
            }
            rep.martingale_defect = std::max(rep.martingale_defect, std::fabs(mean));
            for (double v : cross) {
                rep.residual_orthogonality = std::max(rep.residual_orthogonality, std::fabs(v));
            }
        }
    }
    return rep;
}

AdaptedProcess stochastic_integral(const ScenarioTree& tree, const PredictableProcess& z) {
    AdaptedProcess out = AdaptedProcess::zeros(tree);
    for (std::size_t k = 1; k <= tree.n_steps(); ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            const std::size_t par = tree.parent(k, i);
            const auto zk = z.at(k, par);
            const auto dw = tree.dw(k, i);
            double s = 0.0;
            for (std::size_t j = 0; j < zk.size(); ++j) {
                s += zk[j] * dw[j];
            }
            out(k, i) = out(k - 1, par) + s;
        }
    }
    return out;
}

double reconstruction_defect(const ScenarioTree& tree, const AdaptedProcess& n, const RepresentationPair& rep) {
    const AdaptedProcess zw = stochastic_integral(tree, rep.z);
    const double n0 = n(0, 0);
    double worst = 0.0;
    for (std::size_t k = 0; k <= tree.n_steps(); ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            worst = std::max(worst, std::fabs(n(k, i) - (n0 + zw(k, i) + rep.m(k, i))));
        }
    }
    return worst;
}

DoobDecomposition doob_decompose(const ScenarioTree& tree, const AdaptedProcess& x, bool supermartingale, double tol) {
    require_shape(tree, x, "doob_decompose");
    DoobDecomposition out{AdaptedProcess::constant(tree, x(0, 0)), AdaptedProcess::zeros(tree)};
    const double scale = std::max(1.0, max_abs(tree, x));
    for (std::size_t k = 0; k < tree.n_steps(); ++k) {
        const auto e = conditional_expectation(tree, x.at(k + 1), k);
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            const double drift = e[i] - x(k, i);
            if (supermartingale && drift > tol * scale) {
                std::ostringstream os;
                os << "doob_decompose: not a supermartingale at step " << k << ", node " << i
                   << " (conditional drift " << drift << ")";
                throw InvariantViolation(os.str());
            }
            const std::size_t c0 = tree.first_child(k, i);
            for (std::size_t c = c0; c < c0 + tree.n_children(k, i); ++c) {
                out.a(k + 1, c) = out.a(k, i) - drift;
                out.m(k + 1, c) = out.m(k, i) + (x(k + 1, c) - e[i]);
            }
        }
    }
    return out;
}

void check_strong_supermartingale(const ScenarioTree& tree, const LadlagProcess& x, double tol) {
    require_shape(tree, x.left, "mertens");
    require_shape(tree, x.value, "mertens");
    require_shape(tree, x.right, "mertens");
    const std::size_t n = tree.n_steps();
    double scale = 1.0;
    for (const auto* part : {&x.left, &x.value, &x.right}) {
        scale = std::max(scale, max_abs(tree, *part));
    }
    const double eps = tol * scale;
    auto fail = [](const std::string& what, std::size_t k, std::size_t i) {
        std::ostringstream os;
        os << "strong supermartingale check failed at step " << k << ", node " << i << ": " << what;
        throw InvariantViolation(os.str());
    };
    for (std::size_t k = 0; k <= n; ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            if (x.value(k, i) < x.right(k, i) - eps) {
                fail("value below right limit", k, i);
            }
            if (k == n && std::fabs(x.right(k, i) - x.value(k, i)) > eps) {
                fail("right limit at the horizon must equal the value", k, i);
            }
        }
    }
    for (std::size_t k = 0; k < n; ++k) {
        const auto e = conditional_expectation(tree, x.value.at(k + 1), k);
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            const std::size_t c0 = tree.first_child(k, i);
            const double left = x.left(k + 1, c0);
            for (std::size_t c = c0; c < c0 + tree.n_children(k, i); ++c) {
                if (std::fabs(x.left(k + 1, c) - left) > eps) {
                    fail("left limit is not predictable (differs across siblings)", k + 1, c);
                }
            }
            if (x.right(k, i) < left - eps) {
                fail("right limit below the next left limit", k, i);
            }
            if (left < e[i] - eps) {
                fail("next left limit below the conditional expectation of the next value", k, i);
            }
        }
    }
}

MertensDecomposition mertens_decompose(const ScenarioTree& tree, const LadlagProcess& x, double tol) {
    check_strong_supermartingale(tree, x, tol);
    const std::size_t n = tree.n_steps();
    MertensDecomposition dec;
    for (auto* part : {&dec.m, &dec.a, &dec.i}) {
        part->left = AdaptedProcess::zeros(tree);
        part->value = AdaptedProcess::zeros(tree);
        part->right = AdaptedProcess::zeros(tree);
    }
    dec.i.right(0, 0) = x.value(0, 0) - x.right(0, 0);
    for (std::size_t k = 0; k < n; ++k) {
        const auto e = conditional_expectation(tree, x.value.at(k + 1), k);
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            const std::size_t c0 = tree.first_child(k, i);
            const double left = x.left(k + 1, c0);
            const double continuous_part = x.right(k, i) - left;
            const double jump_part = left - e[i];
            for (std::size_t c = c0; c < c0 + tree.n_children(k, i); ++c) {
                dec.m.left(k + 1, c) = dec.m.value(k, i);
                dec.m.value(k + 1, c) = dec.m.value(k, i) + (x.value(k + 1, c) - e[i]);
                dec.m.right(k + 1, c) = dec.m.value(k + 1, c);

                dec.a.left(k + 1, c) = dec.a.value(k, i) + continuous_part;
                dec.a.value(k + 1, c) = dec.a.left(k + 1, c) + jump_part;
                dec.a.right(k + 1, c) = dec.a.value(k + 1, c);

                dec.i.left(k + 1, c) = dec.i.right(k, i);
                dec.i.value(k + 1, c) = dec.i.right(k, i);
                dec.i.right(k + 1, c) = dec.i.value(k + 1, c) + (x.value(k + 1, c) - x.right(k + 1, c));
            }
        }
    }
    return dec;
}

double mertens_identity_defect(const ScenarioTree& tree, const LadlagProcess& x, const MertensDecomposition& dec) {
    const double x0 = x.value(0, 0);
    double worst = 0.0;
    for (std::size_t k = 0; k <= tree.n_steps(); ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            if (k > 0) {
                worst = std::max(worst, std::fabs(x.left(k, i) - (x0 + dec.m.left(k, i) - dec.a.left(k, i) -
                                                                  dec.i.left(k, i))));
            }
            worst = std::max(worst, std::fabs(x.value(k, i) - (x0 + dec.m.value(k, i) - dec.a.value(k, i) -
                                                               dec.i.value(k, i))));
            worst = std::max(worst, std::fabs(x.right(k, i) - (x0 + dec.m.right(k, i) - dec.a.right(k, i) -
                                                               dec.i.right(k, i))));
        }
    }
    return worst;
}

LadlagProcess exhaust_jumps(const ScenarioTree& tree, const LadlagProcess& x, double eps, std::size_t n_max) {
    if (!(eps > 0.0)) {
        throw PreconditionError("exhaust_jumps: threshold must be positive");
    }
    LadlagProcess out{AdaptedProcess::zeros(tree), AdaptedProcess::zeros(tree), AdaptedProcess::zeros(tree)};
    // Number of jumps collected so far, per node (after the node's own right jump).
    AdaptedProcess count = AdaptedProcess::zeros(tree);
    auto visit = [&](std::size_t k, std::size_t i, double before, double collected) {
        out.left(k, i) = before;
        out.value(k, i) = before;
        const double jump = x.value(k, i) - x.right(k, i);
        if (jump >= eps && collected < static_cast<double>(n_max)) {
            out.right(k, i) = before + jump;
            count(k, i) = collected + 1.0;
        } else {
            out.right(k, i) = before;
            count(k, i) = collected;
        }
    };
    visit(0, 0, 0.0, 0.0);
    for (std::size_t k = 1; k <= tree.n_steps(); ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            const std::size_t par = tree.parent(k, i);
            visit(k, i, out.right(k - 1, par), count(k - 1, par));
        }
    }
    return out;
}

EstimateReport meyer_bound_check(const ScenarioTree& tree, const LadlagProcess& x, double p) {
    if (!(p > 1.0)) {
        throw PreconditionError("meyer_bound_check: p must exceed 1");
    }
    const auto dec = mertens_decompose(tree, x);
    const std::size_t n = tree.n_steps();
    bool right_continuous = true;
    for (std::size_t k = 0; k <= n && right_continuous; ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            if (x.value(k, i) != x.right(k, i)) {
                right_continuous = false;
                break;
            }
        }
    }
    // A and I are non-decreasing from 0, so their total variation on [0, T] is the terminal value.
    auto tv_norm = [&](const AdaptedProcess& terminal_source) {
        std::vector<double> v(terminal_source.at(n).begin(), terminal_source.at(n).end());
        return std::pow(norm_lp(tree, v, p), 1.0 / p);
    };
    const double a_norm = tv_norm(dec.a.value);
    const double i_norm = tv_norm(dec.i.value);
    const double x_norm = std::pow(norm_sp_ladlag(tree, x, p), 1.0 / p);
    const double c = right_continuous ? meyer_constant(p) : ladlag_meyer_constant(p);
    auto rep = EstimateReport::make_explicit("meyer", a_norm + i_norm, c * x_norm, c);
    rep.with("p", p).with("norm_A", a_norm).with("norm_I", i_norm).with("norm_X", x_norm);
    rep.with("right_continuous", right_continuous ? 1.0 : 0.0);
    return rep;
}

MeasureChange girsanov_change(const ScenarioTree& tree, const PredictableProcess& eta) {
    if (eta.dim() != tree.dim() || eta.n_steps() != tree.n_steps()) {
        throw PreconditionError("girsanov_change: eta does not match the tree");
    }
    const double sqdt = std::sqrt(tree.dt());
    double worst = 0.0;
    for (std::size_t k = 1; k <= tree.n_steps(); ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k - 1); ++i) {
            double l1 = 0.0;
            for (double v : eta.at(k, i)) {
                l1 += std::fabs(v);
            }
            worst = std::max(worst, l1);
        }
    }
    if (worst * sqdt >= 1.0) {
        std::ostringstream os;
        os << "girsanov_change: max ||eta||_1 = " << worst << " needs dt < " << 1.0 / (worst * worst)
           << " (have dt = " << tree.dt() << ")";
        throw PreconditionError(os.str());
    }
    MeasureChange q{eta, AdaptedProcess::constant(tree, 1.0)};
    for (std::size_t k = 1; k <= tree.n_steps(); ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            const std::size_t par = tree.parent(k, i);
            const auto e = eta.at(k, par);
            const auto dw = tree.dw(k, i);
            double s = 0.0;
            for (std::size_t j = 0; j < e.size(); ++j) {
                s += e[j] * dw[j];
            }
            q.density(k, i) = q.density(k - 1, par) * (1.0 - s);
        }
    }
    return q;
}

std::vector<double> conditional_expectation_q(const ScenarioTree& tree, const MeasureChange& q,
                                              std::span<const double> next_values, std::size_t step) {
    if (step >= tree.n_steps()) {
        throw PreconditionError("conditional_expectation_q: step out of range");
    }
    std::vector<double> out(tree.nodes_at(step), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto e = q.eta.at(step + 1, i);
        const std::size_t c0 = tree.first_child(step, i);
        double acc = 0.0;
        for (std::size_t c = c0; c < c0 + tree.n_children(step, i); ++c) {
            const auto dw = tree.dw(step + 1, c);
            double s = 0.0;
            for (std::size_t j = 0; j < e.size(); ++j) {
                s += e[j] * dw[j];
            }
            acc += tree.prob(step + 1, c) * (1.0 - s) * next_values[c];
        }
        out[i] = acc;
    }
    return out;
}

double q_martingale_defect(const ScenarioTree& tree, const MeasureChange& q, const AdaptedProcess& x) {
    double worst = 0.0;
    for (std::size_t k = 0; k < tree.n_steps(); ++k) {
        const auto e = conditional_expectation_q(tree, q, x.at(k + 1), k);
        for (std::size_t i = 0; i < e.size(); ++i) {
            worst = std::max(worst, std::fabs(e[i] - x(k, i)));
        }
    }
    return worst;
}

AdaptedProcess q_brownian(const ScenarioTree& tree, const MeasureChange& q, std::size_t coord) {
    AdaptedProcess out = AdaptedProcess::zeros(tree);
    for (std::size_t k = 1; k <= tree.n_steps(); ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            const std::size_t par = tree.parent(k, i);
            out(k, i) = out(k - 1, par) + tree.dw(k, i)[coord] + q.eta.at(k, par)[coord] * tree.dt();
        }
    }
    return out;
}

}  // namespace bsdelab
