#include "bsdelab/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace bsdelab {

std::string csv_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

nlohmann::ordered_json number(double v) {
    if (std::isfinite(v)) {
        return v;
    }
    return csv_number(v);
}

}  // namespace

nlohmann::ordered_json report_to_json(const EstimateReport& r) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["tier"] = tier_name(r.tier);
    j["fingerprint"] = r.fingerprint;
    j["lhs"] = number(r.lhs);
    j["rhs"] = number(r.rhs);
    j["constant"] = number(r.constant);
    j["ratio"] = number(r.ratio);
    j["pass"] = r.pass;
    j["vacuous"] = r.vacuous;
    nlohmann::ordered_json details = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.details) {
        details[k] = number(v);
    }
    j["details"] = std::move(details);
    return j;
}

nlohmann::ordered_json suite_to_json(const SuiteResult& s, bool with_reports) {
    nlohmann::ordered_json j;
    j["suite"] = s.name;
    j["pass"] = s.pass();
    j["reports"] = s.reports.size();
    j["failures"] = s.failures;
    nlohmann::ordered_json summary = nlohmann::ordered_json::object();
    for (const auto& [k, v] : s.summary) {
        summary[k] = number(v);
    }
    j["summary"] = std::move(summary);
    if (with_reports) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& r : s.reports) {
            arr.push_back(report_to_json(r));
        }
        j["report_list"] = std::move(arr);
    }
    return j;
}

nlohmann::ordered_json counterexample_to_json(const CounterexampleReport& r) {
    nlohmann::ordered_json j;
    j["eps"] = r.config.eps;
    j["dt"] = r.config.dt;
    j["horizon"] = r.config.horizon;
    j["paths"] = r.config.n_paths;
    j["slack"] = r.slack;
    j["gap_bound"] = r.gap_bound;
    j["violations"] = r.violations;
    j["gap_max"] = r.gap_max;
    j["gap_q50"] = r.gap_q50;
    j["gap_q90"] = r.gap_q90;
    j["gap_q99"] = r.gap_q99;
    j["mean_tv"] = r.mean_tv;
    j["predicted_tv"] = r.predicted_tv;
    j["predicted_tv_source"] = "exit-time heuristic T/eps";
    j["tv_relative_error"] = r.tv_relative_error;
    j["mean_crossings"] = r.mean_crossings;
    j["coarse_grid"] = r.coarse_grid;
    return j;
}

std::string reports_csv(const std::vector<SuiteResult>& suites) {
    std::ostringstream os;
    os << "suite,id,tier,fingerprint,lhs,rhs,constant,ratio,pass,vacuous\n";
    for (const auto& s : suites) {
        for (const auto& r : s.reports) {
            os << s.name << ',' << r.id << ',' << tier_name(r.tier) << ',' << r.fingerprint << ',' << csv_number(r.lhs)
               << ',' << csv_number(r.rhs) << ',' << csv_number(r.constant) << ',' << csv_number(r.ratio) << ','
               << (r.pass ? 1 : 0) << ',' << (r.vacuous ? 1 : 0) << '\n';
        }
    }
    return os.str();
}

}  // namespace bsdelab
