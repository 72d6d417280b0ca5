#include "bsdelab/tree.hpp"

#include "bsdelab/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace bsdelab {

namespace {

constexpr double prob_tol = 1e-12;

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void validate_law(const RevealSpec& r) {
    if (r.values.empty() || r.values.size() != r.law.size()) {
        throw PreconditionError("reveal at t=" + fmt_double(r.time) +
                                ": values and law must be non-empty and of equal length");
    }
    double total = 0.0;
    for (double q : r.law) {
        if (!(q > 0.0)) {
            throw PreconditionError("reveal at t=" + fmt_double(r.time) + ": law entries must be positive");
        }
        total += q;
    }
    if (std::fabs(total - 1.0) > prob_tol) {
        throw PreconditionError("reveal at t=" + fmt_double(r.time) + ": law sums to " + fmt_double(total));
    }
}

}  // namespace

TimeGrid TimeGrid::uniform(double horizon, std::size_t n_steps) {
    if (!(horizon > 0.0) || n_steps == 0) {
        throw PreconditionError("time grid needs T > 0 and at least one step");
    }
    TimeGrid g;
    g.horizon = horizon;
    g.n_steps = n_steps;
    g.dt = horizon / static_cast<double>(n_steps);
    g.times.resize(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k) {
        g.times[k] = horizon * static_cast<double>(k) / static_cast<double>(n_steps);
    }
    g.times[n_steps] = horizon;
    return g;
}

std::ptrdiff_t TimeGrid::index_of(double t) const noexcept {
    const double scaled = t / dt;
    const double k = std::round(scaled);
    if (k < 0.0 || k > static_cast<double>(n_steps)) {
        return -1;
    }
    const auto idx = static_cast<std::size_t>(k);
    if (std::fabs(times[idx] - t) > 1e-12 * std::max(1.0, horizon)) {
        return -1;
    }
    return static_cast<std::ptrdiff_t>(idx);
}

std::size_t ScenarioTree::total_nodes() const noexcept {
    std::size_t total = 0;
    for (const auto& s : steps_) {
        total += s.prob.size();
    }
    return total;
}

std::size_t ScenarioTree::ancestor(std::size_t leaf, std::size_t step) const noexcept {
    std::size_t node = leaf;
    for (std::size_t k = n_steps(); k > step; --k) {
        node = steps_[k].parent[node];
    }
    return node;
}

bool ScenarioTree::operator==(const ScenarioTree& other) const {
    return grid_ == other.grid_ && dim_ == other.dim_ && reveals_ == other.reveals_ && steps_ == other.steps_;
}

void ScenarioTree::finalize() {
    const std::size_t n = grid_.n_steps;
    reveal_at_step_.assign(n + 1, -1);
    for (std::size_t r = 0; r < reveals_.size(); ++r) {
        reveal_at_step_[static_cast<std::size_t>(grid_.index_of(reveals_[r].time))] = static_cast<std::ptrdiff_t>(r);
    }

    for (std::size_t k = 0; k <= n; ++k) {
        auto& s = steps_[k];
        const std::size_t count = s.prob.size();
        s.first_child.assign(count, 0);
        s.n_children.assign(count, 0);
        s.path_prob.resize(count);
        s.w.resize(count * dim_);
        s.reveal_sum.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            if (k == 0) {
                s.path_prob[i] = s.prob[i];
                std::fill_n(s.w.begin() + static_cast<std::ptrdiff_t>(i * dim_), dim_, 0.0);
                s.reveal_sum[i] = 0.0;
                continue;
            }
            const auto& up = steps_[k - 1];
            const std::size_t p = s.parent[i];
            s.path_prob[i] = up.path_prob[p] * s.prob[i];
            for (std::size_t j = 0; j < dim_; ++j) {
                s.w[i * dim_ + j] = up.w[p * dim_ + j] + s.dw[i * dim_ + j];
            }
            double rs = up.reveal_sum[p];
            if (s.reveal[i] != no_reveal) {
                rs += reveals_[static_cast<std::size_t>(reveal_at_step_[k])].values[static_cast<std::size_t>(s.reveal[i])];
            }
            s.reveal_sum[i] = rs;
        }
        if (k > 0) {
            auto& up = steps_[k - 1];
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t p = s.parent[i];
                if (up.n_children[p] == 0) {
                    up.first_child[p] = i;
                }
                ++up.n_children[p];
            }
            s.proj.assign(dim_ * count, 0.0);
            for (std::size_t j = 0; j < dim_; ++j) {
                for (std::size_t i = 0; i < count; ++i) {
                    s.proj[j * count + i] = s.prob[i] * s.dw[i * dim_ + j] / grid_.dt;
                }
            }
        }
    }

    auto& leaves = steps_[n];
    leaves.leaf_begin.resize(leaves.prob.size());
    leaves.leaf_end.resize(leaves.prob.size());
    std::iota(leaves.leaf_begin.begin(), leaves.leaf_begin.end(), std::size_t{0});
    for (std::size_t i = 0; i < leaves.prob.size(); ++i) {
        leaves.leaf_end[i] = i + 1;
    }
    for (std::size_t k = n; k-- > 0;) {
        auto& s = steps_[k];
        const auto& down = steps_[k + 1];
        s.leaf_begin.resize(s.prob.size());
        s.leaf_end.resize(s.prob.size());
        for (std::size_t i = 0; i < s.prob.size(); ++i) {
            const std::size_t c0 = s.first_child[i];
            const std::size_t c1 = c0 + s.n_children[i] - 1;
            s.leaf_begin[i] = down.leaf_begin[c0];
            s.leaf_end[i] = down.leaf_end[c1];
        }
    }
}

ScenarioTree build_tree(const TreeConfig& config) {
    const TimeGrid& grid = config.grid;
    if (config.dim == 0) {
        throw PreconditionError("Brownian dimension must be >= 1");
    }
    if (grid.times.size() != grid.n_steps + 1 || grid.n_steps == 0) {
        throw PreconditionError("malformed time grid");
    }
    if (config.dim > 16) {
        throw SizingError("Brownian dimension " + std::to_string(config.dim) + " exceeds the supported 16");
    }

    std::vector<std::ptrdiff_t> reveal_at(grid.n_steps + 1, -1);
    for (std::size_t r = 0; r < config.reveals.size(); ++r) {
        const auto& spec = config.reveals[r];
        const std::ptrdiff_t idx = grid.index_of(spec.time);
        if (idx < 0) {
            throw PreconditionError("reveal time " + fmt_double(spec.time) + " is not on the grid (dt=" +
                                    fmt_double(grid.dt) + ")");
        }
        if (idx == 0) {
            throw PreconditionError("reveal time 0 would make the initial sigma-field non-trivial");
        }
        if (reveal_at[static_cast<std::size_t>(idx)] >= 0) {
            throw PreconditionError("two reveals at grid step " + std::to_string(idx));
        }
        validate_law(spec);
        reveal_at[static_cast<std::size_t>(idx)] = static_cast<std::ptrdiff_t>(r);
    }

    const std::size_t brownian_branches = std::size_t{1} << config.dim;
    std::size_t total = 1;
    std::size_t level = 1;
    for (std::size_t k = 1; k <= grid.n_steps; ++k) {
        std::size_t factor = brownian_branches;
        if (reveal_at[k] >= 0) {
            factor *= config.reveals[static_cast<std::size_t>(reveal_at[k])].values.size();
        }
        if (level > config.node_cap / factor) {
            throw SizingError("scenario tree exceeds the node cap of " + std::to_string(config.node_cap) +
                              " nodes at step " + std::to_string(k));
        }
        level *= factor;
        total += level;
        if (total > config.node_cap) {
            throw SizingError("scenario tree needs " + std::to_string(total) + " nodes, above the node cap of " +
                              std::to_string(config.node_cap));
        }
    }

    ScenarioTree tree;
    tree.grid_ = grid;
    tree.dim_ = config.dim;
    tree.node_cap_ = config.node_cap;
    tree.reveals_ = config.reveals;
    tree.steps_.resize(grid.n_steps + 1);

    auto& root = tree.steps_[0];
    root.parent = {0};
    root.prob = {1.0};
    root.dw.assign(config.dim, 0.0);
    root.reveal = {ScenarioTree::no_reveal};

    const double sq = std::sqrt(grid.dt);
    const double branch_p = 1.0 / static_cast<double>(brownian_branches);
    for (std::size_t k = 1; k <= grid.n_steps; ++k) {
        const std::size_t parents = tree.steps_[k - 1].prob.size();
        const RevealSpec* reveal =
            reveal_at[k] >= 0 ? &config.reveals[static_cast<std::size_t>(reveal_at[k])] : nullptr;
        const std::size_t labels = reveal ? reveal->values.size() : 1;
        auto& s = tree.steps_[k];
        const std::size_t count = parents * brownian_branches * labels;
        s.parent.reserve(count);
        s.prob.reserve(count);
        s.dw.reserve(count * config.dim);
        s.reveal.reserve(count);
        for (std::size_t p = 0; p < parents; ++p) {
            for (std::size_t b = 0; b < brownian_branches; ++b) {
                for (std::size_t a = 0; a < labels; ++a) {
                    s.parent.push_back(p);
                    s.prob.push_back(reveal ? branch_p * reveal->law[a] : branch_p);
                    for (std::size_t j = 0; j < config.dim; ++j) {
                        s.dw.push_back(((b >> j) & 1U) ? -sq : sq);
                    }
                    s.reveal.push_back(reveal ? static_cast<std::int32_t>(a) : ScenarioTree::no_reveal);
                }
            }
        }
    }
    tree.finalize();
    return tree;
}

TreeAudit audit_tree(const ScenarioTree& tree) {
    TreeAudit audit;
    const std::size_t d = tree.dim();
    const double dt = tree.dt();
    std::vector<double> mean(d);
    std::vector<double> cov(d * d);
    for (std::size_t k = 0; k < tree.n_steps(); ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            const std::size_t c0 = tree.first_child(k, i);
            const std::size_t nc = tree.n_children(k, i);
            double total = 0.0;
            std::fill(mean.begin(), mean.end(), 0.0);
            std::fill(cov.begin(), cov.end(), 0.0);
            for (std::size_t c = c0; c < c0 + nc; ++c) {
                const double p = tree.prob(k + 1, c);
                const auto dw = tree.dw(k + 1, c);
                total += p;
                for (std::size_t a = 0; a < d; ++a) {
                    mean[a] += p * dw[a];
                    for (std::size_t b = 0; b < d; ++b) {
                        cov[a * d + b] += p * dw[a] * dw[b];
                    }
                }
            }
            audit.prob_sum_defect = std::max(audit.prob_sum_defect, std::fabs(total - 1.0));
            for (std::size_t a = 0; a < d; ++a) {
                audit.dw_mean_defect = std::max(audit.dw_mean_defect, std::fabs(mean[a]));
                for (std::size_t b = 0; b < d; ++b) {
                    const double target = a == b ? dt : 0.0;
                    audit.dw_cov_defect = std::max(audit.dw_cov_defect, std::fabs(cov[a * d + b] - target));
                }
            }

            if (tree.reveal_index_at(k + 1) < 0) {
                continue;
            }
            // Joint law of (Brownian pattern, label) against the product of marginals.
            std::map<std::vector<double>, double> by_pattern;
            std::map<std::int32_t, double> by_label;
            std::map<std::pair<std::vector<double>, std::int32_t>, double> joint;
            for (std::size_t c = c0; c < c0 + nc; ++c) {
                const auto dw = tree.dw(k + 1, c);
                std::vector<double> key(dw.begin(), dw.end());
                const double p = tree.prob(k + 1, c);
                by_pattern[key] += p;
                by_label[tree.reveal(k + 1, c)] += p;
                joint[{key, tree.reveal(k + 1, c)}] += p;
            }
            for (const auto& [pattern, pp] : by_pattern) {
                for (const auto& [label, pl] : by_label) {
                    const auto it = joint.find({pattern, label});
                    const double pj = it == joint.end() ? 0.0 : it->second;
                    audit.reveal_independence_defect =
                        std::max(audit.reveal_independence_defect, std::fabs(pj - pp * pl));
                }
            }
        }
    }
    return audit;
}

std::string serialize_tree(const ScenarioTree& tree) {
    using nlohmann::ordered_json;
    ordered_json out;
    out["version"] = 1;
    ordered_json grid;
    grid["horizon"] = tree.grid().horizon;
    grid["n_steps"] = tree.grid().n_steps;
    grid["dt"] = tree.grid().dt;
    out["grid"] = grid;
    out["d"] = tree.dim();
    ordered_json reveals = ordered_json::array();
    for (const auto& r : tree.reveals()) {
        ordered_json jr;
        jr["time"] = r.time;
        jr["values"] = r.values;
        jr["law"] = r.law;
        reveals.push_back(jr);
    }
    out["reveals"] = reveals;
    ordered_json nodes = ordered_json::array();
    std::size_t offset = 0;
    std::size_t prev_offset = 0;
    for (std::size_t k = 0; k <= tree.n_steps(); ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            ordered_json node;
            node["id"] = offset + i;
            node["step"] = k;
            if (k == 0) {
                node["parent"] = nullptr;
            } else {
                node["parent"] = prev_offset + tree.parent(k, i);
            }
            node["prob"] = tree.prob(k, i);
            const auto dw = tree.dw(k, i);
            node["dw"] = std::vector<double>(dw.begin(), dw.end());
            if (tree.reveal(k, i) == ScenarioTree::no_reveal) {
                node["reveal"] = nullptr;
            } else {
                node["reveal"] = tree.reveal(k, i);
            }
            nodes.push_back(std::move(node));
        }
        prev_offset = offset;
        offset += tree.nodes_at(k);
    }
    out["nodes"] = std::move(nodes);
    return out.dump() + "\n";
}

ScenarioTree deserialize_tree(const std::string& text) {
    nlohmann::json in;
    try {
        in = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("tree JSON does not parse: ") + e.what());
    }
    try {
        if (!in.contains("version") || in.at("version").get<int>() != 1) {
            throw ConfigError("unsupported tree schema version (expected 1)");
        }
        for (const char* key : {"grid", "d", "reveals", "nodes"}) {
            if (!in.contains(key)) {
                throw ConfigError(std::string("tree JSON is missing field '") + key + "'");
            }
        }
        const auto& jg = in.at("grid");
        TreeConfig config;
        config.grid = TimeGrid::uniform(jg.at("horizon").get<double>(), jg.at("n_steps").get<std::size_t>());
        config.dim = in.at("d").get<std::size_t>();
        if (config.dim == 0) {
            throw ConfigError("tree JSON: d must be >= 1");
        }
        for (const auto& jr : in.at("reveals")) {
            RevealSpec r;
            r.time = jr.at("time").get<double>();
            r.values = jr.at("values").get<std::vector<double>>();
            r.law = jr.at("law").get<std::vector<double>>();
            if (config.grid.index_of(r.time) <= 0) {
                throw ConfigError("tree JSON: reveal time " + fmt_double(r.time) + " is not a positive grid time");
            }
            config.reveals.push_back(std::move(r));
        }

        ScenarioTree tree;
        tree.grid_ = config.grid;
        tree.dim_ = config.dim;
        tree.reveals_ = config.reveals;
        tree.steps_.resize(config.grid.n_steps + 1);

        const auto& jnodes = in.at("nodes");
        tree.node_cap_ = std::max(tree.node_cap_, jnodes.size());
        std::vector<std::size_t> step_of;
        std::vector<std::size_t> local_of;
        step_of.reserve(jnodes.size());
        local_of.reserve(jnodes.size());
        for (std::size_t id = 0; id < jnodes.size(); ++id) {
            const auto& jn = jnodes[id];
            if (jn.at("id").get<std::size_t>() != id) {
                throw ConfigError("tree JSON: node ids must be 0..N-1 in order (node " + std::to_string(id) + ")");
            }
            const auto step = jn.at("step").get<std::size_t>();
            if (step > config.grid.n_steps || (!step_of.empty() && step < step_of.back())) {
                throw ConfigError("tree JSON: node " + std::to_string(id) + " has an out-of-order step");
            }
            auto& s = tree.steps_[step];
            std::size_t parent = 0;
            if (step == 0) {
                if (!jn.at("parent").is_null()) {
                    throw ConfigError("tree JSON: root node " + std::to_string(id) + " must have a null parent");
                }
            } else {
                const auto pid = jn.at("parent").get<std::size_t>();
                if (pid >= id || step_of[pid] != step - 1) {
                    throw ConfigError("tree JSON: node " + std::to_string(id) + " has a parent outside the previous step");
                }
                parent = local_of[pid];
                if (!s.parent.empty() && parent < s.parent.back()) {
                    throw ConfigError("tree JSON: children of node " + std::to_string(pid) + " are not contiguous");
                }
            }
            const auto dw = jn.at("dw").get<std::vector<double>>();
            if (dw.size() != config.dim) {
                throw ConfigError("tree JSON: node " + std::to_string(id) + " has a dw of the wrong dimension");
            }
            const auto& jr = jn.at("reveal");
            std::int32_t label = ScenarioTree::no_reveal;
            if (!jr.is_null()) {
                label = jr.get<std::int32_t>();
            }
            local_of.push_back(s.prob.size());
            step_of.push_back(step);
            s.parent.push_back(parent);
            s.prob.push_back(jn.at("prob").get<double>());
            s.dw.insert(s.dw.end(), dw.begin(), dw.end());
            s.reveal.push_back(label);
        }

        if (tree.steps_[0].prob.size() != 1) {
            throw ConfigError("tree JSON: exactly one root node is required");
        }
        std::vector<std::ptrdiff_t> reveal_at(config.grid.n_steps + 1, -1);
        for (std::size_t r = 0; r < config.reveals.size(); ++r) {
            reveal_at[static_cast<std::size_t>(config.grid.index_of(config.reveals[r].time))] =
                static_cast<std::ptrdiff_t>(r);
        }
        std::size_t offset = 0;
        for (std::size_t k = 0; k <= config.grid.n_steps; ++k) {
            const auto& s = tree.steps_[k];
            if (s.prob.empty()) {
                throw ConfigError("tree JSON: step " + std::to_string(k) + " has no nodes (all leaves must sit at depth n)");
            }
            for (std::size_t i = 0; i < s.prob.size(); ++i) {
                const std::int32_t label = s.reveal[i];
                if (reveal_at[k] < 0 ? label != ScenarioTree::no_reveal
                                     : (label < 0 || static_cast<std::size_t>(label) >=
                                                         config.reveals[static_cast<std::size_t>(reveal_at[k])].values.size())) {
                    throw ConfigError("tree JSON: node " + std::to_string(offset + i) + " has an invalid reveal label");
                }
                if (!(s.prob[i] > 0.0)) {
                    throw InvariantViolation("tree JSON: node " + std::to_string(offset + i) + " has a non-positive probability");
                }
            }
            if (k < config.grid.n_steps) {
                std::vector<double> sums(s.prob.size(), 0.0);
                std::vector<std::size_t> kids(s.prob.size(), 0);
                const auto& down = tree.steps_[k + 1];
                for (std::size_t c = 0; c < down.prob.size(); ++c) {
                    sums[down.parent[c]] += down.prob[c];
                    ++kids[down.parent[c]];
                }
                for (std::size_t i = 0; i < s.prob.size(); ++i) {
                    if (kids[i] == 0) {
                        throw ConfigError("tree JSON: node " + std::to_string(offset + i) + " is a leaf before the horizon");
                    }
                    if (std::fabs(sums[i] - 1.0) > prob_tol) {
                        throw InvariantViolation("tree JSON: child probabilities of node " + std::to_string(offset + i) +
                                                 " sum to " + fmt_double(sums[i]));
                    }
                }
            }
            offset += s.prob.size();
        }
        tree.finalize();
        return tree;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("tree JSON schema violation: ") + e.what());
    }
}

}  // namespace bsdelab
