#include "bsdelab/runner.hpp"

#include "bsdelab/counterexample.hpp"
#include "bsdelab/errors.hpp"
#include "bsdelab/reflected.hpp"
#include "bsdelab/report.hpp"
#include "bsdelab/suites.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace bsdelab {

using json = nlohmann::ordered_json;

ExperimentKind parse_experiment(const std::string& s) {
    if (s == "solve") return ExperimentKind::solve;
    if (s == "reflect") return ExperimentKind::reflect;
    if (s == "picard") return ExperimentKind::picard;
    if (s == "verify") return ExperimentKind::verify;
    if (s == "counterexample") return ExperimentKind::counterexample;
    if (s == "snell-check") return ExperimentKind::snell_check;
    throw ConfigError("field 'experiment': unknown kind '" + s + "'");
}

const char* experiment_name(ExperimentKind k) noexcept {
    switch (k) {
        case ExperimentKind::solve: return "solve";
        case ExperimentKind::reflect: return "reflect";
        case ExperimentKind::picard: return "picard";
        case ExperimentKind::verify: return "verify";
        case ExperimentKind::counterexample: return "counterexample";
        case ExperimentKind::snell_check: return "snell-check";
    }
    return "?";
}

namespace {

// Field readers with diagnostics of the form "field 'a.b': ...".

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw ConfigError("field '" + path + "': " + what);
}

const json* member(const json& j, const char* key) {
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

void read(const json& j, const char* key, const std::string& path, double& out, bool positive = false) {
    if (const json* v = member(j, key)) {
        if (!v->is_number()) bad(path, "expected a number");
        out = v->get<double>();
        if (!std::isfinite(out)) bad(path, "must be finite");
        if (positive && !(out > 0.0)) bad(path, "must be positive");
    }
}

template <class Int>
void read_int(const json& j, const char* key, const std::string& path, Int& out, bool positive = false) {
    if (const json* v = member(j, key)) {
        if (!v->is_number_unsigned()) {
            bad(path, "expected a non-negative integer");
        }
        out = static_cast<Int>(v->get<unsigned long long>());
        if (positive && out == 0) bad(path, "must be positive");
    }
}

void read(const json& j, const char* key, const std::string& path, std::string& out) {
    if (const json* v = member(j, key)) {
        if (!v->is_string()) bad(path, "expected a string");
        out = v->get<std::string>();
    }
}

void read(const json& j, const char* key, const std::string& path, std::vector<double>& out) {
    if (const json* v = member(j, key)) {
        if (!v->is_array()) bad(path, "expected an array of numbers");
        out.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            if (!(*v)[i].is_number()) bad(path + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back((*v)[i].get<double>());
        }
    }
}

const json& object_at(const json& j, const char* key, const std::string& path) {
    static const json empty = json::object();
    const json* v = member(j, key);
    if (!v) return empty;
    if (!v->is_object()) bad(path, "expected an object");
    return *v;
}

template <class F>
auto wrap(const std::string& path, F f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        bad(path, e.what());
    }
}

Scheme parse_scheme(const std::string& s) {
    if (s == "implicit") return Scheme::implicit_step;
    if (s == "explicit") return Scheme::explicit_step;
    throw ConfigError("unknown scheme '" + s + "' (implicit or explicit)");
}

const char* scheme_key(Scheme s) {
    return s == Scheme::implicit_step ? "implicit" : "explicit";
}

void validate(const ExperimentConfig& c) {
    if (c.tree.dim < 1) bad("tree.dim", "must be at least 1");
    if (c.tree.n_steps < 1) bad("tree.n_steps", "must be at least 1");
    for (std::size_t i = 0; i < c.norms.size(); ++i) {
        try {
            c.norms[i].validate();
        } catch (const Error& e) {
            bad("norms[" + std::to_string(i) + "]", e.what());
        }
    }
    for (const auto& s : c.suites) {
        if (s != "all" && std::find(suite_names().begin(), suite_names().end(), s) == suite_names().end()) {
            bad("suites", "unknown suite '" + s + "'");
        }
    }
    if (c.workers == 0) bad("workers", "must be positive");
    if (c.slope_eps.size() < 2) bad("counterexample.slope_eps", "needs at least two values");
    for (double e : c.slope_eps) {
        if (!(e > 0.0)) bad("counterexample.slope_eps", "values must be positive");
    }
    if (!(c.ce_dt < 1.0)) bad("counterexample.dt", "must be below 1");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& root) {
    if (!root.is_object()) {
        throw ConfigError("configuration must be a JSON object");
    }
    const json& j = member(root, "config") && member(root, "config_hash") ? root.at("config") : root;
    if (!j.is_object()) bad("config", "expected an object");
    ExperimentConfig c;
    if (const json* v = member(j, "version")) {
        if (!v->is_number_integer() || v->get<int>() != schema_version) {
            bad("version", "unsupported schema version (expected " + std::to_string(schema_version) + ")");
        }
    }
    std::string kind = experiment_name(c.experiment);
    read(j, "experiment", "experiment", kind);
    c.experiment = parse_experiment(kind);

    const json& t = object_at(j, "tree", "tree");
    read(t, "horizon", "tree.horizon", c.tree.horizon, true);
    read_int(t, "n_steps", "tree.n_steps", c.tree.n_steps, true);
    read_int(t, "dim", "tree.dim", c.tree.dim, true);
    read_int(t, "node_cap", "tree.node_cap", c.tree.node_cap, true);
    if (const json* r = member(t, "reveals")) {
        if (!r->is_array()) bad("tree.reveals", "expected an array");
        c.tree.reveals.clear();
        for (std::size_t i = 0; i < r->size(); ++i) {
            const std::string path = "tree.reveals[" + std::to_string(i) + "]";
            const json& e = (*r)[i];
            if (!e.is_object()) bad(path, "expected an object");
            RevealSpec rs;
            if (!member(e, "time")) bad(path + ".time", "missing");
            read(e, "time", path + ".time", rs.time);
            read(e, "values", path + ".values", rs.values);
            read(e, "law", path + ".law", rs.law);
            if (rs.law.empty() || rs.law.size() != rs.values.size()) {
                bad(path + ".law", "must be non-empty and match values in length");
            }
            c.tree.reveals.push_back(std::move(rs));
        }
    }

    const json& f = object_at(j, "family", "family");
    std::string driver = family_name(c.family.driver);
    std::string terminal = family_name(c.family.terminal);
    std::string obstacle = family_name(c.family.obstacle);
    read(f, "driver", "family.driver", driver);
    read(f, "terminal", "family.terminal", terminal);
    read(f, "obstacle", "family.obstacle", obstacle);
    c.family.driver = wrap("family.driver", [&] { return parse_driver_family(driver); });
    c.family.terminal = wrap("family.terminal", [&] { return parse_terminal_family(terminal); });
    c.family.obstacle = wrap("family.obstacle", [&] { return parse_obstacle_family(obstacle); });
    read(f, "lipschitz", "family.lipschitz", c.family.lipschitz, true);
    read(f, "scale", "family.scale", c.family.scale, true);

    read_int(j, "instances", "instances", c.instances, true);
    std::string scheme = scheme_key(c.scheme);
    read(j, "scheme", "scheme", scheme);
    c.scheme = wrap("scheme", [&] { return parse_scheme(scheme); });
    if (const json* n = member(j, "norms")) {
        if (!n->is_array() || n->empty()) bad("norms", "expected a non-empty array");
        c.norms.clear();
        for (std::size_t i = 0; i < n->size(); ++i) {
            const std::string path = "norms[" + std::to_string(i) + "]";
            if (!(*n)[i].is_object()) bad(path, "expected an object");
            NormConfig nc;
            read((*n)[i], "p", path + ".p", nc.p);
            read((*n)[i], "alpha", path + ".alpha", nc.alpha);
            c.norms.push_back(nc);
        }
    }
    read_int(j, "seed", "seed", c.seed);
    read(j, "output", "output", c.output);
    read(j, "tolerance", "tolerance", c.tol, true);
    read_int(j, "workers", "workers", c.workers, true);

    if (const json* s = member(j, "suites")) {
        if (!s->is_array()) bad("suites", "expected an array of names");
        c.suites.clear();
        for (std::size_t i = 0; i < s->size(); ++i) {
            if (!(*s)[i].is_string()) bad("suites[" + std::to_string(i) + "]", "expected a string");
            c.suites.push_back((*s)[i].get<std::string>());
        }
    }
    read(j, "suite_size", "suite_size", c.suite_size, true);

    const json& ce = object_at(j, "counterexample", "counterexample");
    read(ce, "eps", "counterexample.eps", c.ce_eps, true);
    read(ce, "dt", "counterexample.dt", c.ce_dt, true);
    read(ce, "horizon", "counterexample.horizon", c.ce_horizon, true);
    read_int(ce, "paths", "counterexample.paths", c.ce_paths, true);
    read(ce, "slope_eps", "counterexample.slope_eps", c.slope_eps);
    read_int(ce, "slope_paths", "counterexample.slope_paths", c.slope_paths, true);

    const json& pc = object_at(j, "picard", "picard");
    read(pc, "alpha", "picard.alpha", c.picard_alpha);
    read_int(pc, "max_iter", "picard.max_iter", c.picard_max_iter, true);
    read(pc, "tol", "picard.tol", c.picard_tol, true);

    validate(c);
    return c;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return from_json(j);
}

json ExperimentConfig::to_json() const {
    json j;
    j["version"] = schema_version;
    j["experiment"] = experiment_name(experiment);
    json t;
    t["horizon"] = tree.horizon;
    t["n_steps"] = tree.n_steps;
    t["dim"] = tree.dim;
    t["node_cap"] = tree.node_cap;
    t["reveals"] = json::array();
    for (const auto& r : tree.reveals) {
        json e;
        e["time"] = r.time;
        e["values"] = r.values;
        e["law"] = r.law;
        t["reveals"].push_back(std::move(e));
    }
    j["tree"] = std::move(t);
    json f;
    f["driver"] = family_name(family.driver);
    f["terminal"] = family_name(family.terminal);
    f["obstacle"] = family_name(family.obstacle);
    f["lipschitz"] = family.lipschitz;
    f["scale"] = family.scale;
    j["family"] = std::move(f);
    j["instances"] = instances;
    j["scheme"] = scheme_key(scheme);
    j["norms"] = json::array();
    for (const auto& n : norms) {
        j["norms"].push_back(json{{"p", n.p}, {"alpha", n.alpha}});
    }
    j["seed"] = seed;
    j["output"] = output;
    j["tolerance"] = tol;
    j["workers"] = workers;
    j["suites"] = suites;
    j["suite_size"] = suite_size;
    j["counterexample"] = json{{"eps", ce_eps},         {"dt", ce_dt},
                               {"horizon", ce_horizon}, {"paths", ce_paths},
                               {"slope_eps", slope_eps}, {"slope_paths", slope_paths}};
    j["picard"] = json{{"alpha", picard_alpha}, {"max_iter", picard_max_iter}, {"tol", picard_tol}};
    return j;
}

std::string ExperimentConfig::canonical() const {
    return to_json().dump(2);
}

std::uint64_t ExperimentConfig::hash() const {
    // Output location and worker count do not change results.
    json j = to_json();
    j.erase("output");
    j.erase("workers");
    return fnv1a(j.dump());
}

namespace {

std::string num(double v) {
    return csv_number(v);
}

std::vector<BsdeInstance> make_instances(const ExperimentConfig& c, bool reflected) {
    const auto tree = make_tree(c.tree);
    FamilySpec fs = c.family;
    fs.seed = RandomSeed{c.seed, 0};
    if (!reflected) {
        fs.obstacle = ObstacleFamily::none;
    } else if (fs.obstacle == ObstacleFamily::none) {
        fs.obstacle = ObstacleFamily::random;
    }
    std::vector<BsdeInstance> out;
    for (std::size_t i = 0; i < c.instances; ++i) {
        out.push_back(make_instance(fs, tree, i));
    }
    return out;
}

double max_abs_y(const ScenarioTree& tree, const AdaptedProcess& y) {
    double m = 1.0;
    for (std::size_t k = 0; k <= tree.n_steps(); ++k) {
        for (double v : y.at(k)) {
            m = std::max(m, std::fabs(v));
        }
    }
    return m;
}

void solve_like(const ExperimentConfig& c, bool reflected, RunResult& res, json& summary) {
    const auto instances = make_instances(c, reflected);
    std::ostringstream sol_csv;
    std::ostringstream norm_csv;
    sol_csv << "instance,step,node,y,z_norm,m,k,n,driver\n";
    norm_csv << "instance,p,alpha,norm_S,norm_H,norm_H1,norm_M,norm_I\n";
    json rows = json::array();
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const BsdeInstance& inst = instances[i];
        const ScenarioTree& tree = *inst.tree;
        const SolutionQuadruple sol = reflected ? solve_reflected(inst, c.scheme) : solve_bsde(inst, c.scheme);
        for (std::size_t k = 0; k <= tree.n_steps(); ++k) {
            for (std::size_t j = 0; j < tree.nodes_at(k); ++j) {
                double zn = 0.0;
                if (k < tree.n_steps()) {
                    for (double z : sol.z.at(k + 1, j)) {
                        zn += z * z;
                    }
                }
                sol_csv << i << ',' << k << ',' << j << ',' << num(sol.y(k, j)) << ',' << num(std::sqrt(zn)) << ','
                        << num(sol.m(k, j)) << ',' << num(sol.k(k, j)) << ',' << num(sol.n(k, j)) << ','
                        << num(sol.driver(k, j)) << '\n';
            }
        }
        for (const auto& nc : c.norms) {
            const NormReport nr = norm_report(tree, sol.y, sol.z, sol.m, sol.k, nc);
            norm_csv << i << ',' << num(nc.p) << ',' << num(nc.alpha) << ',' << num(nr.s_p) << ','
                     << num(nr.h_p_alpha) << ',' << num(nr.h1_p_alpha) << ',' << num(nr.m_p_alpha) << ','
                     << num(nr.i_p_alpha) << '\n';
        }
        const double scale = max_abs_y(tree, sol.y);
        const auto& d = sol.diagnostics;
        json row{{"instance", i},
                 {"y0", sol.y(0, 0)},
                 {"dynamics_residual", d.dynamics_residual},
                 {"orthogonality", d.orthogonality},
                 {"martingale_defect", d.martingale_defect}};
        if (d.dynamics_residual > 1e-9 * scale || d.orthogonality > 1e-12 * scale ||
            d.martingale_defect > 1e-12 * scale) {
            res.failures.push_back("instance " + std::to_string(i) + ": solver diagnostics out of tolerance");
        }
        if (reflected) {
            const double sk = std::fabs(check_skorokhod(tree, sol, *inst.obstacle));
            row["skorokhod_defect"] = sk;
            if (sk > 1e-12 * scale) {
                res.failures.push_back("instance " + std::to_string(i) + ": Skorokhod defect " + num(sk));
            }
        }
        rows.push_back(std::move(row));
    }
    summary["instances"] = std::move(rows);
    res.artifacts.push_back({"solutions.csv", sol_csv.str()});
    res.artifacts.push_back({"norms.csv", norm_csv.str()});
}

void picard_run(const ExperimentConfig& c, RunResult& res, json& summary) {
    const auto instances = make_instances(c, true);
    std::ostringstream csv;
    csv << "instance,iteration,dist_stop,dist_weighted,dist_full,dist_l,ratio\n";
    json rows = json::array();
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const BsdeInstance& inst = instances[i];
        const double alpha = c.picard_alpha > 0.0 ? c.picard_alpha : alpha_star(inst.g.l_y(), inst.g.l_z());
        PicardTrace trace;
        double diff = std::numeric_limits<double>::quiet_NaN();
        try {
            const auto pr = picard_solve(inst, alpha, c.picard_max_iter, c.picard_tol);
            trace = pr.trace;
            const auto direct = solve_reflected(inst, Scheme::implicit_step);
            diff = 0.0;
            for (std::size_t k = 0; k <= inst.tree->n_steps(); ++k) {
                for (std::size_t j = 0; j < inst.tree->nodes_at(k); ++j) {
                    diff = std::max(diff, std::fabs(pr.solution.y(k, j) - direct.y(k, j)));
                }
            }
            if (diff > 1e-9) {
                res.failures.push_back("instance " + std::to_string(i) + ": Picard limit differs by " + num(diff));
            }
        } catch (const PicardError& e) {
            trace = e.trace();
            res.failures.push_back("instance " + std::to_string(i) + ": " + e.what());
        }
        for (std::size_t s = 0; s < trace.steps.size(); ++s) {
            const auto& st = trace.steps[s];
            csv << i << ',' << s + 1 << ',' << num(st.dist_stop) << ',' << num(st.dist_weighted) << ','
                << num(st.dist_full) << ',' << num(st.dist_l) << ',' << num(st.ratio) << '\n';
        }
        rows.push_back(json{{"instance", i},
                            {"alpha", alpha},
                            {"iterations", trace.iterations},
                            {"converged", trace.converged},
                            {"max_ratio", trace.max_ratio()},
                            {"limit_vs_direct", std::isfinite(diff) ? json(diff) : json("nan")}});
        if (trace.converged && !(trace.max_ratio() < 1.0)) {
            res.failures.push_back("instance " + std::to_string(i) + ": contraction ratio " + num(trace.max_ratio()));
        }
    }
    summary["instances"] = std::move(rows);
    res.artifacts.push_back({"picard.csv", csv.str()});
}

void snell_run(const ExperimentConfig& c, RunResult& res, json& summary) {
    const auto instances = make_instances(c, true);
    std::vector<SuiteResult> wrapped(1);
    wrapped[0].name = "snell-check";
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto sol = solve_reflected(instances[i], c.scheme);
        auto r = verify_snell_representation(instances[i], sol, c.scheme);
        r.fingerprint = i;
        if (!r.pass) {
            res.failures.push_back("instance " + std::to_string(i) + ": Snell representation defect " + num(r.lhs));
        }
        wrapped[0].reports.push_back(std::move(r));
    }
    summary["suite"] = suite_to_json(wrapped[0], true);
    res.artifacts.push_back({"reports.csv", reports_csv(wrapped)});
}

void verify_run(const ExperimentConfig& c, RunResult& res, json& summary) {
    SuiteOptions o;
    o.seed = RandomSeed{c.seed, 0};
    o.size = c.suite_size;
    o.workers = c.workers;
    o.tol = c.tol;
    o.counterexample_paths = c.ce_paths;
    o.counterexample_dt = c.ce_dt;
    o.slope_paths = c.slope_paths;
    const auto suites = run_suites(c.suites, o);
    json arr = json::array();
    std::ostringstream log;
    for (const auto& s : suites) {
        for (const auto& f : s.failures) {
            res.failures.push_back(s.name + ": " + f);
        }
        arr.push_back(suite_to_json(s));
        log << std::left << std::setw(16) << s.name << (s.pass() ? "PASS" : "FAIL") << "  " << s.reports.size()
            << " reports, " << s.failures.size() << " failures, " << std::fixed << std::setprecision(2) << s.seconds
            << " s\n";
    }
    res.log += log.str();
    summary["suites"] = std::move(arr);
    res.artifacts.push_back({"reports.csv", reports_csv(suites)});
}

void counterexample_run(const ExperimentConfig& c, RunResult& res, json& summary) {
    CounterexampleConfig cfg;
    cfg.eps = c.ce_eps;
    cfg.dt = c.ce_dt;
    cfg.horizon = c.ce_horizon;
    cfg.n_paths = c.ce_paths;
    cfg.seed = RandomSeed{c.seed, 0};
    cfg.workers = c.workers;
    const auto rep = run_counterexample(cfg);
    if (!rep.gap_ok()) {
        res.failures.push_back(std::to_string(rep.violations) + " paths exceed the gap bound");
    }
    summary["ladder"] = counterexample_to_json(rep);
    CounterexampleConfig base = cfg;
    base.n_paths = c.slope_paths;
    base.seed = cfg.seed.substream(1);
    const auto fit = tv_slope(c.slope_eps, base);
    json s{{"eps", fit.eps}, {"mean_tv", fit.mean_tv}, {"slope", fit.slope}, {"intercept", fit.intercept}};
    summary["tv_slope"] = std::move(s);
    std::ostringstream tidy;
    tidy << "eps,mean_tv,predicted_tv\n";
    for (std::size_t j = 0; j < fit.eps.size(); ++j) {
        tidy << num(fit.eps[j]) << ',' << num(fit.mean_tv[j]) << ',' << num(c.ce_horizon / fit.eps[j]) << '\n';
    }
    res.artifacts.push_back({"paths.csv", counterexample_csv(rep)});
    res.artifacts.push_back({"tv_slope.csv", tidy.str()});
}

}  // namespace

RunResult run(const ExperimentConfig& config) {
    RunResult res;
    json summary;
    summary["experiment"] = experiment_name(config.experiment);
    try {
        // Tree sizing problems are configuration errors.
        try {
            (void)make_tree(config.tree);
        } catch (const Error& e) {
            throw ConfigError(std::string("field 'tree': ") + e.what());
        }
        switch (config.experiment) {
            case ExperimentKind::solve: solve_like(config, false, res, summary); break;
            case ExperimentKind::reflect: solve_like(config, true, res, summary); break;
            case ExperimentKind::picard: picard_run(config, res, summary); break;
            case ExperimentKind::verify: verify_run(config, res, summary); break;
            case ExperimentKind::counterexample: counterexample_run(config, res, summary); break;
            case ExperimentKind::snell_check: snell_run(config, res, summary); break;
        }
    } catch (const ConfigError& e) {
        res.exit_code = 2;
        res.failures = {e.what()};
        res.artifacts.clear();
        return res;
    } catch (const Error& e) {
        res.failures.push_back(e.what());
    }
    res.exit_code = res.failures.empty() ? 0 : 1;
    summary["failures"] = res.failures;
    summary["pass"] = res.exit_code == 0;
    res.artifacts.push_back({"summary.json", summary.dump(2) + "\n"});

    json manifest;
    manifest["version"] = ExperimentConfig::schema_version;
    manifest["experiment"] = experiment_name(config.experiment);
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << config.hash();
    manifest["config_hash"] = hash.str();
    manifest["seed"] = config.seed;
    manifest["exit_code"] = res.exit_code;
    manifest["failures"] = res.failures;
    json arts = json::array();
    for (const auto& a : res.artifacts) {
        std::ostringstream h;
        h << std::hex << std::setw(16) << std::setfill('0') << fnv1a(a.content);
        arts.push_back(json{{"name", a.name}, {"bytes", a.content.size()}, {"fnv1a", h.str()}});
    }
    manifest["artifacts"] = std::move(arts);
    manifest["config"] = config.to_json();
    res.artifacts.push_back({"manifest.json", manifest.dump(2) + "\n"});
    return res;
}

void write_artifacts(const RunResult& result, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (const auto& a : result.artifacts) {
        std::ofstream out(fs::path(dir) / a.name, std::ios::binary);
        if (!out) {
            throw Error("cannot write " + (fs::path(dir) / a.name).string());
        }
        out << a.content;
    }
}

}  // namespace bsdelab
