#pragma once

#include <string>
#include <vector>

#include "flab/config.hpp"

namespace flab {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNegative = 2;  // valid run, negative scientific result

const std::vector<std::string>& subcommands();

/// Runs one subcommand and writes its artifacts plus resolved.ini into
/// cfg.outputs.dir. Returns kExitOk or kExitNegative; throws flab::Error on
/// failure with the subcommand and potential in the message.
int run_subcommand(const std::string& cmd, const ExperimentConfig& cfg, bool quiet = false);

}  // namespace flab
