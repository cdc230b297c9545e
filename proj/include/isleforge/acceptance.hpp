#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace isleforge {

struct AcceptanceOptions {
    // A1-A5 only.
    bool quick = false;
    // Criterion ids to run; empty runs all (subject to quick).
    std::vector<std::string> only;
    // Sensitivity hook: every limit constant lambda is doubled.
    bool double_lambda = false;
    unsigned workers = 1;
    std::uint64_t seed = 20240601;
};

struct CriterionResult {
    std::string id;
    std::string title;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
    nlohmann::json data;
};

// Runs the criteria in order, printing one line per criterion to `log` as
// each finishes.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options, std::ostream& log);

nlohmann::json acceptance_report(const std::vector<CriterionResult>& results);

bool all_passed(const std::vector<CriterionResult>& results);

} // namespace isleforge
