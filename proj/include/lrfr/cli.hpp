#pragma once

#include <optional>
#include <string>
#include <vector>

namespace lrfr::cli {

// Runs every method listed in the config over one shared task sequence and
// writes <method>.json / <method>.csv artifacts to the output directory.
// Exit codes: 0 success, 2 invalid config (nothing written), 3 runtime
// failure.
int cmd_run(const std::string& config_path, const std::optional<std::string>& out_override,
            bool quiet);

// Prints the per-task, per-layer rank/null-dim/audit table of an artifact.
// Exit codes: 0 success, 2 unreadable or invalid artifact.
int cmd_inspect(const std::string& artifact_path);

// Prints ACC/BWT side by side and per-layer null-dim deltas. Requires
// identical provenance across artifacts. Exit codes: 0, 2 on mismatch.
int cmd_compare(const std::vector<std::string>& artifact_paths);

} // namespace lrfr::cli
