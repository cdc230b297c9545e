#pragma once

#include <iosfwd>

#include "isleforge/config.hpp"

namespace isleforge {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfigError = 1,
    kExitAcceptanceFailure = 2,
    kExitBudgetExhausted = 3,
};

// Each command writes its artifacts under cfg.out and returns an exit code.
int cmd_simulate(const RunConfig& cfg, std::ostream& log);
int cmd_limit_sample(const RunConfig& cfg, std::ostream& log);
int cmd_cumulant(const RunConfig& cfg, std::ostream& log);
int cmd_verify(const RunConfig& cfg, std::ostream& log);

} // namespace isleforge
