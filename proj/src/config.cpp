#include "lrfr/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "lrfr/errors.hpp"

namespace lrfr {
namespace {

void require_object(const Json& j, const std::string& ctx) {
    if (!j.is_object()) fail(Errc::InvalidConfig, ctx + " must be an object");
}

void reject_unknown_keys(const Json& obj, const std::set<std::string>& allowed,
                         const std::string& ctx) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) fail(Errc::InvalidConfig, ctx + ": unknown key '" + key + "'");
}

const Json& require_key(const Json& obj, const char* key, const std::string& ctx) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(Errc::InvalidConfig, ctx + ": missing key '" + key + "'");
    return *it;
}

std::uint64_t get_uint(const Json& obj, const char* key, const std::string& ctx,
                       std::uint64_t min_value = 0) {
    const Json& v = require_key(obj, key, ctx);
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0))
        fail(Errc::InvalidConfig, ctx + ": '" + key + "' must be a non-negative integer");
    const std::uint64_t value = v.get<std::uint64_t>();
    if (value < min_value)
        fail(Errc::InvalidConfig, ctx + ": '" + key + "' is below the allowed minimum");
    return value;
}

double get_double(const Json& obj, const char* key, const std::string& ctx) {
    const Json& v = require_key(obj, key, ctx);
    if (!v.is_number()) fail(Errc::InvalidConfig, ctx + ": '" + key + "' must be a number");
    const double value = v.get<double>();
    if (!std::isfinite(value)) fail(Errc::InvalidConfig, ctx + ": '" + key + "' must be finite");
    return value;
}

std::string get_string(const Json& obj, const char* key, const std::string& ctx) {
    const Json& v = require_key(obj, key, ctx);
    if (!v.is_string() || v.get<std::string>().empty())
        fail(Errc::InvalidConfig, ctx + ": '" + key + "' must be a non-empty string");
    return v.get<std::string>();
}

bool get_bool(const Json& obj, const char* key, const std::string& ctx) {
    const Json& v = require_key(obj, key, ctx);
    if (!v.is_boolean()) fail(Errc::InvalidConfig, ctx + ": '" + key + "' must be a boolean");
    return v.get<bool>();
}

Json normalize_dataset(const Json& spec, const std::string& ctx, bool allow_permuted) {
    require_object(spec, ctx);
    const std::string type = get_string(spec, "type", ctx);
    Json out;
    out["type"] = type;
    if (type == "gaussian") {
        reject_unknown_keys(spec,
                            {"type", "dim", "classes_per_task", "tasks", "n_train", "n_test",
                             "separation", "seed"},
                            ctx);
        out["dim"] = get_uint(spec, "dim", ctx, 1);
        out["classes_per_task"] = get_uint(spec, "classes_per_task", ctx, 1);
        out["tasks"] = get_uint(spec, "tasks", ctx, 1);
        out["n_train"] = get_uint(spec, "n_train", ctx, 1);
        out["n_test"] = get_uint(spec, "n_test", ctx, 1);
        const double separation = get_double(spec, "separation", ctx);
        if (separation < 0.0) fail(Errc::InvalidConfig, ctx + ": separation must be >= 0");
        out["separation"] = separation;
        out["seed"] = get_uint(spec, "seed", ctx);
    } else if (type == "idx") {
        reject_unknown_keys(spec, {"type", "images", "labels", "classes_per_task", "tasks",
                                   "normalize"},
                            ctx);
        out["images"] = get_string(spec, "images", ctx);
        out["labels"] = get_string(spec, "labels", ctx);
        out["classes_per_task"] = get_uint(spec, "classes_per_task", ctx, 1);
        out["tasks"] = get_uint(spec, "tasks", ctx, 1);
        out["normalize"] = get_bool(spec, "normalize", ctx);
    } else if (type == "permuted") {
        if (!allow_permuted)
            fail(Errc::InvalidConfig, ctx + ": permuted datasets cannot be nested");
        reject_unknown_keys(spec, {"type", "tasks", "seed", "base"}, ctx);
        out["tasks"] = get_uint(spec, "tasks", ctx, 1);
        out["seed"] = get_uint(spec, "seed", ctx);
        out["base"] = normalize_dataset(require_key(spec, "base", ctx), ctx + ".base",
                                        /*allow_permuted=*/false);
    } else {
        fail(Errc::InvalidConfig, ctx + ": unknown dataset type '" + type + "'");
    }
    return out;
}

TrainConfig parse_training(const Json& obj) {
    const std::string ctx = "training";
    require_object(obj, ctx);
    reject_unknown_keys(obj,
                        {"epochs", "batch_size", "lr", "lr_milestones", "mu", "k_percent",
                         "rel_tol", "energy", "pretrain_epochs", "seed"},
                        ctx);
    TrainConfig cfg;
    if (obj.contains("epochs")) cfg.epochs = get_uint(obj, "epochs", ctx, 1);
    if (obj.contains("batch_size")) cfg.batch_size = get_uint(obj, "batch_size", ctx, 2);
    if (obj.contains("lr")) {
        cfg.lr = get_double(obj, "lr", ctx);
        if (!(cfg.lr > 0.0)) fail(Errc::InvalidConfig, "training: lr must be > 0");
    }
    if (obj.contains("lr_milestones")) {
        const Json& ms = obj["lr_milestones"];
        if (!ms.is_array()) fail(Errc::InvalidConfig, "training: lr_milestones must be an array");
        cfg.lr_milestones.clear();
        for (const Json& m : ms) {
            if (!m.is_number_integer() || m.get<long long>() < 1)
                fail(Errc::InvalidConfig, "training: lr_milestones entries must be integers >= 1");
            cfg.lr_milestones.push_back(m.get<std::size_t>());
        }
    }
    if (obj.contains("mu")) {
        cfg.mu = get_double(obj, "mu", ctx);
        if (cfg.mu < 0.0) fail(Errc::InvalidConfig, "training: mu must be >= 0");
    }
    if (obj.contains("k_percent")) {
        cfg.k_percent = get_double(obj, "k_percent", ctx);
        if (!(cfg.k_percent > 0.0 && cfg.k_percent <= 100.0))
            fail(Errc::InvalidConfig, "training: k_percent must be in (0, 100]");
    }
    if (obj.contains("rel_tol")) {
        cfg.rel_tol = get_double(obj, "rel_tol", ctx);
        if (!(cfg.rel_tol > 0.0 && cfg.rel_tol < 1.0))
            fail(Errc::InvalidConfig, "training: rel_tol must be in (0, 1)");
    }
    if (obj.contains("energy")) {
        cfg.energy = get_double(obj, "energy", ctx);
        if (!(cfg.energy > 0.0 && cfg.energy <= 1.0))
            fail(Errc::InvalidConfig, "training: energy must be in (0, 1]");
    }
    if (obj.contains("pretrain_epochs"))
        cfg.pretrain_epochs = get_uint(obj, "pretrain_epochs", ctx);
    if (obj.contains("seed")) cfg.seed = get_uint(obj, "seed", ctx);
    return cfg;
}

} // namespace

ExperimentConfig parse_config(const Json& doc) {
    const std::string ctx = "config";
    require_object(doc, ctx);
    reject_unknown_keys(doc, {"dataset", "architecture", "training", "methods", "output_dir"},
                        ctx);

    ExperimentConfig cfg;
    cfg.dataset = normalize_dataset(require_key(doc, "dataset", ctx), "dataset",
                                    /*allow_permuted=*/true);

    const Json& arch = require_key(doc, "architecture", ctx);
    require_object(arch, "architecture");
    reject_unknown_keys(arch, {"layer_sizes"}, "architecture");
    const Json& sizes = require_key(arch, "layer_sizes", "architecture");
    if (!sizes.is_array() || sizes.size() < 2)
        fail(Errc::InvalidConfig, "architecture: layer_sizes needs at least 2 entries");
    for (const Json& s : sizes) {
        if (!s.is_number_integer() || s.get<long long>() < 1)
            fail(Errc::InvalidConfig, "architecture: layer sizes must be integers >= 1");
        cfg.layer_sizes.push_back(s.get<std::size_t>());
    }

    cfg.train = doc.contains("training") ? parse_training(doc["training"]) : TrainConfig{};

    const Json& methods = require_key(doc, "methods", ctx);
    if (!methods.is_array() || methods.empty())
        fail(Errc::InvalidConfig, "methods must be a non-empty array");
    for (const Json& m : methods) {
        if (!m.is_string()) fail(Errc::InvalidConfig, "methods entries must be strings");
        const auto parsed = method_from_string(m.get<std::string>());
        if (!parsed)
            fail(Errc::InvalidConfig, "unknown method '" + m.get<std::string>() + "'");
        for (Method existing : cfg.methods)
            if (existing == *parsed)
                fail(Errc::InvalidConfig, "duplicate method '" + m.get<std::string>() + "'");
        cfg.methods.push_back(*parsed);
    }

    cfg.output_dir = get_string(doc, "output_dir", ctx);

    // Cross-checks that do not need the data on disk.
    if (cfg.dataset["type"] == "gaussian" &&
        cfg.dataset["dim"].get<std::size_t>() != cfg.layer_sizes.front())
        fail(Errc::InvalidConfig, "dataset dim does not match architecture input width");
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::InvalidConfig, "cannot open config file: " + path);
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

TaskSequence build_tasks(const Json& spec) {
    const std::string type = spec["type"].get<std::string>();
    if (type == "gaussian") {
        return gen_gaussian_tasks(spec["dim"].get<std::size_t>(),
                                  spec["classes_per_task"].get<std::size_t>(),
                                  spec["tasks"].get<std::size_t>(),
                                  spec["n_train"].get<std::size_t>(),
                                  spec["n_test"].get<std::size_t>(),
                                  spec["separation"].get<double>(),
                                  spec["seed"].get<std::uint64_t>());
    }
    if (type == "idx") {
        return load_idx_split(spec["images"].get<std::string>(),
                              spec["labels"].get<std::string>(),
                              spec["classes_per_task"].get<std::size_t>(),
                              spec["tasks"].get<std::size_t>(), spec["normalize"].get<bool>());
    }
    if (type == "permuted") {
        TaskSequence base = build_tasks(spec["base"]);
        TaskSequence seq = gen_permuted_tasks(base.tasks.front(), spec["tasks"].get<std::size_t>(),
                                              spec["seed"].get<std::uint64_t>());
        seq.provenance += "<-" + base.provenance;
        return seq;
    }
    fail(Errc::InvalidConfig, "unknown dataset type '" + type + "'");
}

Json config_echo(const ExperimentConfig& cfg, Method method) {
    Json training;
    training["epochs"] = cfg.train.epochs;
    training["batch_size"] = cfg.train.batch_size;
    training["lr"] = cfg.train.lr;
    training["lr_milestones"] = cfg.train.lr_milestones;
    training["mu"] = cfg.train.mu;
    training["k_percent"] = cfg.train.k_percent;
    training["rel_tol"] = cfg.train.rel_tol;
    training["energy"] = cfg.train.energy;
    training["pretrain_epochs"] = cfg.train.pretrain_epochs;
    training["seed"] = cfg.train.seed;
    training["method"] = method_name(method);

    Json echo;
    echo["dataset"] = cfg.dataset;
    echo["architecture"] = Json{{"layer_sizes", cfg.layer_sizes}};
    echo["training"] = training;
    echo["output_dir"] = cfg.output_dir;
    return echo;
}

Json provenance_json(const ExperimentConfig& cfg, const TaskSequence& seq) {
    Json p;
    p["dataset"] = cfg.dataset;
    p["architecture"] = cfg.layer_sizes;
    p["seed"] = cfg.train.seed;
    p["generator"] = seq.provenance;
    return p;
}

} // namespace lrfr
