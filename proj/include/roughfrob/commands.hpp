// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <roughfrob/core.hpp>

namespace roughfrob {

/// Outcome of one experiment. `result` is deterministic for a given config.
struct CommandOutput {
  json result;
  int exit_code = 0;
  std::vector<std::pair<std::string, Field>> grids;  // (file stem, field) to write next to the result
  std::string table_csv;                              // convergence tables
};

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 2;
constexpr int kExitNonconvergence = 3;
constexpr int kExitConfig = 4;

int exit_code_for(ErrorKind kind);
json error_record(const Error& e);

const std::vector<std::string>& command_names();
const std::vector<std::string>& preset_names();
/// Config of a named preset, including its "command".
json preset(const std::string& name);
/// Applies cfg["preset"] if present; keys of cfg override the preset.
json resolve_config(const json& cfg);

/// Runs one subcommand. Library errors propagate as roughfrob::Error.
CommandOutput run_command(const std::string& command, const json& cfg);
/// As run_command, but errors become a JSON error record with the matching exit code.
CommandOutput run_command_safe(const std::string& command, const json& cfg);

}  // namespace roughfrob
