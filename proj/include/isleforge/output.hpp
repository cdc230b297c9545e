#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "isleforge/empirical.hpp"

namespace isleforge {

inline constexpr const char* kVersion = ISLEFORGE_VERSION;

// %.17g: parses back to the same double.
std::string format_double(double x);

// Leading comment lines of every CSV: version, command and resolved config.
void write_csv_preamble(std::ostream& os, const std::string& command, const nlohmann::json& config);

// Wraps a JSON payload with version, command and resolved config.
nlohmann::json with_provenance(nlohmann::json payload, const std::string& command, const nlohmann::json& config);

// replicate,N,r,model,fn_id,integral,islands,fertile,overflow,steps
void write_replicate_rows(std::ostream& os, const std::vector<ReplicateSummary>& rows, bool header);

// source,replicate,atom
void write_atom_rows(std::ostream& os, const std::string& source, std::uint64_t replicate,
                     const std::vector<double>& atoms);

struct LimitRow {
    std::uint64_t sample = 0;
    std::vector<double> integrals;
    std::uint64_t nodes = 0;
    bool overflow = false;
};

// source,sample,model,fn_id,integral,nodes,overflow with source=limit
void write_limit_rows(std::ostream& os, const std::string& model, const std::vector<LimitRow>& rows);

} // namespace isleforge
