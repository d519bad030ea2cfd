#include "lrfr/artifacts.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "lrfr/errors.hpp"

namespace lrfr {
namespace {

const char* projector_kind(Method method) {
    switch (method) {
        case Method::lrfr:
        case Method::nscl_full:
            return "nullspace";
        case Method::lowrank_baseline:
            return "lowrank";
        case Method::finetune:
            return "identity";
    }
    return "?";
}

Json layer_reports_json(const std::vector<LayerRankReport>& reports) {
    Json arr = Json::array();
    for (std::size_t l = 0; l < reports.size(); ++l) {
        Json entry;
        entry["layer"] = l + 1;
        entry["rank"] = reports[l].rank;
        entry["null_dim"] = reports[l].null_dim;
        arr.push_back(std::move(entry));
    }
    return arr;
}

} // namespace

Json make_result_json(const ExperimentConfig& cfg, const TaskSequence& seq,
                      const MethodRunResult& result, const std::string& timestamp) {
    Json j;
    j["schema_version"] = kResultSchemaVersion;
    j["timestamp"] = timestamp;
    j["method"] = method_name(result.method);
    j["projector"] = projector_kind(result.method);
    j["provenance"] = provenance_json(cfg, seq);
    j["config"] = config_echo(cfg, result.method);

    Json acc_rows = Json::array();
    for (const auto& row : result.accuracy.rows) acc_rows.push_back(row);
    j["accuracy_matrix"] = std::move(acc_rows);
    j["metrics"] = Json{{"acc", result.metrics.acc}, {"bwt", result.metrics.bwt}};

    Json trajectory = Json::array();
    for (std::size_t t = 0; t < result.trajectory.size(); ++t) {
        Json entry;
        entry["task"] = t + 1;
        entry["layers"] = layer_reports_json(result.trajectory[t]);
        trajectory.push_back(std::move(entry));
    }
    j["rank_trajectory"] = std::move(trajectory);
    j["final_rank_report"] = layer_reports_json(result.final_report);

    Json audits = Json::array();
    for (std::size_t t = 1; t < result.audit_per_past.size(); ++t) {
        Json entry;
        entry["task"] = t + 1;
        entry["max_drift"] = result.audit_max[t];
        entry["per_past_task"] = result.audit_per_past[t];
        audits.push_back(std::move(entry));
    }
    j["stability_audit"] = Json{{"budget", kStabilityAuditBudget}, {"per_task", std::move(audits)}};

    Json masks = Json::array();
    for (std::size_t t = 0; t < result.mask_indices.size(); ++t) {
        Json entry;
        entry["task"] = t + 1;
        entry["active"] = result.mask_indices[t];
        masks.push_back(std::move(entry));
    }
    j["masks"] = std::move(masks);
    return j;
}

std::string make_result_csv(const MethodRunResult& result) {
    std::string csv = "task,layer,rank,null_dim,audit\n";
    char buf[128];
    for (std::size_t t = 0; t < result.trajectory.size(); ++t) {
        for (std::size_t l = 0; l < result.trajectory[t].size(); ++l) {
            const LayerRankReport& r = result.trajectory[t][l];
            if (t == 0) {
                std::snprintf(buf, sizeof(buf), "%zu,%zu,%zu,%zu,\n", t + 1, l + 1, r.rank,
                              r.null_dim);
            } else {
                std::snprintf(buf, sizeof(buf), "%zu,%zu,%zu,%zu,%.17g\n", t + 1, l + 1, r.rank,
                              r.null_dim, result.audit_max[t]);
            }
            csv += buf;
        }
    }
    return csv;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::IoError, "cannot open for writing: " + path);
    out << content;
    if (!out) fail(Errc::IoError, "write failed: " + path);
}

Json load_artifact(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::IoError, "cannot open artifact: " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::InvalidSpec, std::string("artifact is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("schema_version") ||
        j["schema_version"] != kResultSchemaVersion)
        fail(Errc::InvalidSpec, "unsupported artifact schema: " + path);
    for (const char* key :
         {"method", "projector", "provenance", "metrics", "accuracy_matrix", "rank_trajectory",
          "stability_audit"})
        if (!j.contains(key)) fail(Errc::InvalidSpec, std::string("artifact misses '") + key + "'");
    return j;
}

int inspect_artifact(const std::string& path, std::ostream& out, std::ostream& err) {
    Json j;
    try {
        j = load_artifact(path);
    } catch (const std::exception& e) {
        err << "inspect: " << e.what() << "\n";
        return 2;
    }
    try {
        const std::string projector = j["projector"].get<std::string>();
        out << "method: " << j["method"].get<std::string>() << "\n";
        out << "acc: " << j["metrics"]["acc"].dump() << "  bwt: " << j["metrics"]["bwt"].dump()
            << "\n";
        out << "task  layer  rank  null_dim  projector  audit\n";
        const Json& audit_entries = j["stability_audit"]["per_task"];
        for (const Json& entry : j["rank_trajectory"]) {
            const std::size_t task = entry["task"].get<std::size_t>();
            std::string audit = "-";
            for (const Json& a : audit_entries)
                if (a["task"].get<std::size_t>() == task) audit = a["max_drift"].dump();
            for (const Json& layer : entry["layers"]) {
                char line[160];
                std::snprintf(line, sizeof(line), "%-5zu %-6zu %-5zu %-9zu %-10s %s\n", task,
                              layer["layer"].get<std::size_t>(), layer["rank"].get<std::size_t>(),
                              layer["null_dim"].get<std::size_t>(), projector.c_str(),
                              audit.c_str());
                out << line;
            }
        }
    } catch (const std::exception& e) {
        err << "inspect: malformed artifact: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

int compare_artifacts(const std::vector<std::string>& paths, std::ostream& out,
                      std::ostream& err) {
    if (paths.size() < 2) {
        err << "compare: need at least two artifacts\n";
        return 2;
    }
    std::vector<Json> artifacts;
    try {
        for (const std::string& path : paths) artifacts.push_back(load_artifact(path));
    } catch (const std::exception& e) {
        err << "compare: " << e.what() << "\n";
        return 2;
    }
    for (std::size_t i = 1; i < artifacts.size(); ++i) {
        if (artifacts[i]["provenance"] != artifacts[0]["provenance"]) {
            err << "compare: provenance mismatch between " << paths[0] << " and " << paths[i]
                << "\n";
            return 2;
        }
    }

    try {
        out << "method        acc        bwt\n";
        for (const Json& a : artifacts) {
            char line[160];
            std::snprintf(line, sizeof(line), "%-13s %-10.6f %-10.6f\n",
                          a["method"].get<std::string>().c_str(),
                          a["metrics"]["acc"].get<double>(), a["metrics"]["bwt"].get<double>());
            out << line;
        }

        out << "\nnull_dim deltas vs " << artifacts[0]["method"].get<std::string>() << ":\n";
        out << "task  layer";
        for (std::size_t i = 1; i < artifacts.size(); ++i)
            out << "  vs_" << artifacts[i]["method"].get<std::string>();
        out << "\n";
        const Json& base_traj = artifacts[0]["rank_trajectory"];
        for (std::size_t t = 0; t < base_traj.size(); ++t) {
            const Json& base_layers = base_traj[t]["layers"];
            for (std::size_t l = 0; l < base_layers.size(); ++l) {
                out << base_traj[t]["task"].get<std::size_t>() << "     "
                    << base_layers[l]["layer"].get<std::size_t>();
                for (std::size_t i = 1; i < artifacts.size(); ++i) {
                    const long long base_null =
                        base_layers[l]["null_dim"].get<long long>();
                    const long long other_null = artifacts[i]["rank_trajectory"][t]["layers"][l]
                                                     ["null_dim"]
                                                         .get<long long>();
                    out << "      " << (base_null - other_null);
                }
                out << "\n";
            }
        }
    } catch (const std::exception& e) {
        err << "compare: malformed artifact: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace lrfr
