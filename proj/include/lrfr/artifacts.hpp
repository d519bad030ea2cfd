#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lrfr/config.hpp"
#include "lrfr/trainer.hpp"

namespace lrfr {

inline constexpr int kResultSchemaVersion = 1;

// Result artifact for one method run. Key order is fixed, so two runs of the
// same config differ only in the timestamp value.
Json make_result_json(const ExperimentConfig& cfg, const TaskSequence& seq,
                      const MethodRunResult& result, const std::string& timestamp);

// Companion CSV: one row per (task, layer) with the rank/null-dim of the
// projector basis used for that task and the post-task stability audit
// (empty for the first task, which has no past tasks).
std::string make_result_csv(const MethodRunResult& result);

void write_text_file(const std::string& path, const std::string& content);

// Loads and structurally validates a result artifact (schema version, the
// fields inspect/compare need). Throws Error on anything unexpected.
Json load_artifact(const std::string& path);

// Per-task, per-layer table of rank, null dimension, projector kind and
// stability audit. Returns an exit code (0 ok, 2 unreadable artifact).
int inspect_artifact(const std::string& path, std::ostream& out, std::ostream& err);

// Side-by-side ACC/BWT plus per-layer null-dimension deltas (first artifact
// minus each other). Exit 2 when the artifacts' provenance differs.
int compare_artifacts(const std::vector<std::string>& paths, std::ostream& out,
                      std::ostream& err);

} // namespace lrfr
