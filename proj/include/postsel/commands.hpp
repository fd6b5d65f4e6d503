#pragma once

#include <string>

#include "postsel/config.hpp"

namespace postsel {

// Subcommand bodies; they throw ValidationError / NumericalError and return
// the process exit code (0 success, 3 when a solve finished degraded).
int cmd_select(ConfigMap& cfg);
int cmd_infer(ConfigMap& cfg);
int cmd_simulate(ConfigMap& cfg);
int cmd_features(ConfigMap& cfg);

// Dispatch with exception-to-exit-code mapping: 2 validation, 3 numerical.
int run_command(const std::string& name, ConfigMap& cfg);

}  // namespace postsel
