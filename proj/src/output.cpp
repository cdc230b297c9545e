#include "isleforge/output.hpp"

#include <cstdio>
#include <ostream>

namespace isleforge {

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv_preamble(std::ostream& os, const std::string& command, const nlohmann::json& config) {
    os << "# isleforge " << kVersion << " command=" << command << '\n';
    os << "# config " << config.dump() << '\n';
}

nlohmann::json with_provenance(nlohmann::json payload, const std::string& command, const nlohmann::json& config) {
    nlohmann::json j;
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = config;
    j["result"] = std::move(payload);
    return j;
}

void write_replicate_rows(std::ostream& os, const std::vector<ReplicateSummary>& rows, bool header) {
    if (header) os << "replicate,N,r,model,fn_id,integral,islands,fertile,overflow,steps\n";
    for (const auto& s : rows) {
        for (std::size_t j = 0; j < s.integrals.size(); ++j) {
            os << s.replicate_index << ',' << s.N << ',' << s.r << ',' << to_string(s.model) << ',' << j << ','
               << format_double(s.integrals[j]) << ',' << s.islands << ',' << s.fertile << ','
               << (s.overflow ? 1 : 0) << ',' << s.steps << '\n';
        }
    }
}

void write_atom_rows(std::ostream& os, const std::string& source, std::uint64_t replicate,
                     const std::vector<double>& atoms) {
    for (double a : atoms) os << source << ',' << replicate << ',' << format_double(a) << '\n';
}

void write_limit_rows(std::ostream& os, const std::string& model, const std::vector<LimitRow>& rows) {
    os << "source,sample,model,fn_id,integral,nodes,overflow\n";
    for (const auto& r : rows)
        for (std::size_t j = 0; j < r.integrals.size(); ++j)
            os << "limit," << r.sample << ',' << model << ',' << j << ',' << format_double(r.integrals[j]) << ','
               << r.nodes << ',' << (r.overflow ? 1 : 0) << '\n';
}

} // namespace isleforge
