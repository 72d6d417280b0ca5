#pragma once

// JSON and CSV renderings of reports. Output is canonical (fixed key order,
// round-trip precision, no timings) so that equal runs give equal bytes.

#include "bsdelab/counterexample.hpp"
#include "bsdelab/estimate_report.hpp"
#include "bsdelab/suites.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace bsdelab {

nlohmann::ordered_json report_to_json(const EstimateReport& report);

/// Suite summary with failures and notes; reports are listed only when `with_reports`.
nlohmann::ordered_json suite_to_json(const SuiteResult& suite, bool with_reports = false);

nlohmann::ordered_json counterexample_to_json(const CounterexampleReport& report);

/// Header plus one row per report: suite,id,tier,fingerprint,lhs,rhs,constant,ratio,pass,vacuous.
std::string reports_csv(const std::vector<SuiteResult>& suites);

/// Round-trip formatting of a double for CSV cells ("nan", "inf" for non-finite values).
std::string csv_number(double v);

}  // namespace bsdelab
