#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include "lrfr/artifacts.hpp"
#include "lrfr/cli.hpp"
#include "lrfr/config.hpp"
#include "lrfr/errors.hpp"

using namespace lrfr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

Json base_config() {
    return Json::parse(R"({
        "dataset": {"type": "gaussian", "dim": 6, "classes_per_task": 2, "tasks": 2,
                     "n_train": 40, "n_test": 30, "separation": 3.0, "seed": 12},
        "architecture": {"layer_sizes": [6, 8, 8]},
        "training": {"epochs": 3, "batch_size": 10, "lr": 0.05, "lr_milestones": [2],
                      "mu": 0.1, "k_percent": 50.0, "rel_tol": 1e-8, "energy": 0.9,
                      "pretrain_epochs": 2, "seed": 4},
        "methods": ["finetune"],
        "output_dir": "unused"
    })");
}

std::string write_config(const TempDir& dir, const Json& doc) {
    const std::string path = (dir.path / "config.json").string();
    std::ofstream out(path);
    out << doc.dump(2);
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string strip_timestamp(std::string text) {
    static const std::regex stamp("\"timestamp\": \"[^\"]*\"");
    return std::regex_replace(text, stamp, "\"timestamp\": \"\"");
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("config validation rejects unknown keys and bad values") {
    CHECK_NOTHROW(parse_config(base_config()));

    Json unknown = base_config();
    unknown["surprise"] = 1;
    CHECK_THROWS_WITH_AS(parse_config(unknown), doctest::Contains("unknown key"), Error);

    Json nested_unknown = base_config();
    nested_unknown["training"]["momentum"] = 0.9;
    CHECK_THROWS_AS(parse_config(nested_unknown), Error);

    Json bad_lr = base_config();
    bad_lr["training"]["lr"] = -0.5;
    CHECK_THROWS_AS(parse_config(bad_lr), Error);

    Json bad_batch = base_config();
    bad_batch["training"]["batch_size"] = 1;
    CHECK_THROWS_AS(parse_config(bad_batch), Error);

    Json bad_method = base_config();
    bad_method["methods"] = {"lrfr", "sgd"};
    CHECK_THROWS_AS(parse_config(bad_method), Error);

    Json dim_mismatch = base_config();
    dim_mismatch["architecture"]["layer_sizes"] = {7, 8};
    CHECK_THROWS_AS(parse_config(dim_mismatch), Error);
}

TEST_CASE("run writes one artifact pair per method and exits 0") {
    TempDir dir("lrfr_cli_run");
    const std::string cfg_path = write_config(dir, base_config());
    const std::string out_dir = (dir.path / "results").string();
    CHECK(cli::cmd_run(cfg_path, out_dir, /*quiet=*/true) == 0);
    CHECK(fs::exists(out_dir + "/finetune.json"));
    CHECK(fs::exists(out_dir + "/finetune.csv"));
}

TEST_CASE("invalid configs exit 2 and write nothing") {
    TempDir dir("lrfr_cli_invalid");
    Json bad = base_config();
    bad["training"]["lr"] = -1.0;
    const std::string cfg_path = write_config(dir, bad);
    const std::string out_dir = (dir.path / "results").string();
    CHECK(cli::cmd_run(cfg_path, out_dir, true) == 2);
    CHECK(!fs::exists(out_dir));
    CHECK(cli::cmd_run((dir.path / "missing.json").string(), out_dir, true) == 2);
}

TEST_CASE("repeat runs are byte-identical modulo the timestamp") {
    TempDir dir("lrfr_cli_repeat");
    Json doc = base_config();
    doc["methods"] = {"lrfr", "finetune"};
    const std::string cfg_path = write_config(dir, doc);
    const std::string out_a = (dir.path / "a").string();
    const std::string out_b = (dir.path / "b").string();
    REQUIRE(cli::cmd_run(cfg_path, out_a, true) == 0);
    REQUIRE(cli::cmd_run(cfg_path, out_b, true) == 0);
    for (const char* name : {"lrfr", "finetune"}) {
        const std::string ja = strip_timestamp(slurp(out_a + "/" + name + ".json"));
        const std::string jb = strip_timestamp(slurp(out_b + "/" + name + ".json"));
        CHECK(ja == jb);
        CHECK(slurp(out_a + "/" + name + ".csv") == slurp(out_b + "/" + name + ".csv"));
    }
}

TEST_CASE("inspect prints one row per task and layer") {
    TempDir dir("lrfr_cli_inspect");
    const std::string cfg_path = write_config(dir, base_config());
    const std::string out_dir = (dir.path / "results").string();
    REQUIRE(cli::cmd_run(cfg_path, out_dir, true) == 0);

    std::ostringstream out, err;
    CHECK(inspect_artifact(out_dir + "/finetune.json", out, err) == 0);
    const std::string table = out.str();
    // 2 tasks x 2 layers plus header.
    std::size_t rows = 0;
    for (char c : table) rows += (c == '\n');
    CHECK(rows >= 2 * 2 + 3);
    CHECK(table.find("identity") != std::string::npos);
}

TEST_CASE("inspect rejects truncated artifacts with exit 2") {
    TempDir dir("lrfr_cli_truncated");
    const std::string path = (dir.path / "broken.json").string();
    std::ofstream(path) << "{\"schema_version\": 1, \"method\": \"lrfr";
    std::ostringstream out, err;
    CHECK(inspect_artifact(path, out, err) == 2);
}

TEST_CASE("compare requires identical provenance") {
    TempDir dir("lrfr_cli_compare");
    Json doc = base_config();
    doc["methods"] = {"lrfr", "finetune"};
    const std::string cfg_path = write_config(dir, doc);
    const std::string out_dir = (dir.path / "results").string();
    REQUIRE(cli::cmd_run(cfg_path, out_dir, true) == 0);

    std::ostringstream out, err;
    CHECK(compare_artifacts({out_dir + "/lrfr.json", out_dir + "/finetune.json"}, out, err) == 0);
    CHECK(out.str().find("acc") != std::string::npos);
    CHECK(out.str().find("null_dim deltas") != std::string::npos);

    // Same config apart from the seed: provenance must not match.
    Json reseeded = doc;
    reseeded["training"]["seed"] = 5;
    const std::string cfg2 = (dir.path / "config2.json").string();
    std::ofstream(cfg2) << reseeded.dump(2);
    const std::string out_dir2 = (dir.path / "results2").string();
    REQUIRE(cli::cmd_run(cfg2, out_dir2, true) == 0);
    std::ostringstream out2, err2;
    CHECK(compare_artifacts({out_dir + "/lrfr.json", out_dir2 + "/lrfr.json"}, out2, err2) == 2);
    CHECK(err2.str().find("provenance") != std::string::npos);
}

} // TEST_SUITE
