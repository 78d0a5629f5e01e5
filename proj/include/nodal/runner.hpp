#pragma once

#include "nodal/config.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace nodal {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_hypothesis = 2, exit_solver = 3, exit_integrity = 4 };

struct RunOptions {
  std::string config_path;  // empty: built-in defaults
  std::string out_dir;      // empty: config.output
  bool force = false;       // skip the recorded hypothesis pass (recorded in the manifest)
  std::optional<std::uint64_t> seed;
  std::optional<int> max_threads;
};

/// Effective configuration: file (or defaults) with command-line overrides.
RunConfig effective_config(const RunOptions& options);

/// Subcommands check, ladder, orbit, solve, report. Errors are reported on
/// `err` and mapped to exit codes; nothing throws.
int run_command(const std::string& command, const RunOptions& options, std::ostream& out, std::ostream& err);

/// Reconstructs a ladder table (rows and their omega profiles) from
/// `<dir>/ladder.json`, verifying every file against the manifest.
LadderTable load_ladder(const std::string& dir);

}  // namespace nodal
