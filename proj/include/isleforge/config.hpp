#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "isleforge/isles.hpp"
#include "isleforge/limits.hpp"
#include "isleforge/measure.hpp"
#include "isleforge/trees.hpp"

namespace isleforge {

struct ConfigError : std::runtime_error {
    ConfigError(std::string field_path, const std::string& message)
        : std::runtime_error(field_path + ": " + message), field(std::move(field_path)) {}
    std::string field;
};

struct PoolConfig {
    // Read the pool from this CSV; generated when empty.
    std::string path;
    std::string method = "walk";
    std::uint64_t n_ref = 2000;
    double dt = 1e-4;
    std::uint64_t size = 100'000;
};

struct RunConfig {
    Model model = Model::fossil;
    OffspringLaw law = OffspringLaw::geometric_half();
    double c = 1.0;
    std::vector<std::uint64_t> N{100};
    std::uint64_t replicates = 100;
    std::uint64_t master_seed = 20240601;
    unsigned workers = 1;
    std::uint64_t step_cap = 100'000'000;
    double support_min = 0.01;
    std::vector<TestFunction> test_functions;
    std::string out = "out";
    double max_overflow_rate = 0.01;
    bool dump_atoms = false;

    // limit-sample and cumulant
    std::uint64_t limit_samples = 1000;
    std::uint64_t tree_budget = kDefaultTreeBudget;
    // cumulant: draws stop once every integral reaches this (0 disables)
    double saturation = 50.0;
    double tol = 1e-12;
    PoolConfig pool;

    // verify
    bool quick = false;
    std::vector<std::string> only;
    std::string inject_fault;

    LimitParams limit_params() const;
    PCMethod pc_method() const;
    nlohmann::json to_json() const;
};

// Missing fields keep their defaults; unknown fields are errors.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

// Re-checks cross-field constraints after command-line overrides.
void validate_config(const RunConfig& cfg);

std::vector<TestFunction> default_test_functions(Model model);

} // namespace isleforge
