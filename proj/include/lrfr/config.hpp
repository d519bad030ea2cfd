#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lrfr/datasets.hpp"
#include "lrfr/trainer.hpp"

namespace lrfr {

using Json = nlohmann::ordered_json;

// Parsed and validated experiment description. `dataset` is the normalized
// dataset spec with every field explicit, so echoes and provenance do not
// depend on which optional keys the input spelled out.
struct ExperimentConfig {
    Json dataset;
    std::vector<std::size_t> layer_sizes;
    TrainConfig train; // method field is per-run; filled by the runner
    std::vector<Method> methods;
    std::string output_dir;
};

// Validates the whole document before any compute. Unknown keys anywhere are
// rejected (Error with code InvalidConfig).
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config_file(const std::string& path);

// Instantiates the task sequence described by a normalized dataset spec.
TaskSequence build_tasks(const Json& dataset_spec);

// Normalized config echo (with the given method substituted), used inside
// result artifacts.
Json config_echo(const ExperimentConfig& cfg, Method method);

// Dataset spec + architecture + training seed; two artifacts are comparable
// exactly when these match.
Json provenance_json(const ExperimentConfig& cfg, const TaskSequence& seq);

} // namespace lrfr
