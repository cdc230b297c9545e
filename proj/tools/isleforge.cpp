#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isleforge/commands.hpp"
#include "isleforge/config.hpp"
#include "isleforge/output.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::string> out;
    bool quick = false;
    std::vector<std::string> only;
    std::string fault;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON run configuration");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--workers", o.workers, "worker threads (default: ISLEFORGE_WORKERS or 1)");
    cmd->add_option("--out", o.out, "output directory");
}

isleforge::RunConfig resolve(const Overrides& o) {
    auto cfg = o.config.empty() ? isleforge::parse_config(nlohmann::json::object()) : isleforge::load_config(o.config);
    if (const char* env = std::getenv("ISLEFORGE_WORKERS"); env && *env) {
        try {
            cfg.workers = static_cast<unsigned>(std::stoul(env));
        } catch (const std::exception&) {
            throw isleforge::ConfigError("ISLEFORGE_WORKERS", "must be a positive integer");
        }
    }
    if (o.seed) cfg.master_seed = *o.seed;
    if (o.workers) cfg.workers = *o.workers;
    if (o.out) cfg.out = *o.out;
    if (o.quick) cfg.quick = true;
    if (!o.only.empty()) cfg.only = o.only;
    if (!o.fault.empty()) cfg.inject_fault = o.fault;
    isleforge::validate_config(cfg);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo and limit objects for critical branching islands"};
    app.set_version_flag("--version", std::string(isleforge::kVersion));
    app.require_subcommand(1);
    Overrides o;
    auto* simulate = app.add_subcommand("simulate", "simulate the N-island system; replicate CSV + summary JSON");
    auto* limit = app.add_subcommand("limit-sample", "draw the limiting measure; limit CSV + summary JSON");
    auto* cumulant = app.add_subcommand("cumulant", "solver, limit and simulation cumulants; cumulant JSON");
    auto* verify = app.add_subcommand("verify", "run the acceptance criteria; report JSON");
    for (auto* cmd : {simulate, limit, cumulant, verify}) add_common(cmd, o);
    verify->add_flag("--quick", o.quick, "criteria A1-A5 only");
    verify->add_option("--only", o.only, "criterion ids to run");
    verify->add_option("--inject-fault", o.fault)->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : isleforge::kExitConfigError;
    }

    try {
        const auto cfg = resolve(o);
        if (simulate->parsed()) return isleforge::cmd_simulate(cfg, std::cerr);
        if (limit->parsed()) return isleforge::cmd_limit_sample(cfg, std::cerr);
        if (cumulant->parsed()) return isleforge::cmd_cumulant(cfg, std::cerr);
        return isleforge::cmd_verify(cfg, std::cout);
    } catch (const isleforge::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return isleforge::kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return isleforge::kExitConfigError;
    }
}
