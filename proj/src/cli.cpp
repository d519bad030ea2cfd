#include "lrfr/cli.hpp"

#include <ctime>
#include <filesystem>
#include <iostream>

#include "lrfr/artifacts.hpp"
#include "lrfr/config.hpp"
#include "lrfr/errors.hpp"

namespace lrfr::cli {
namespace {

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

} // namespace

int cmd_run(const std::string& config_path, const std::optional<std::string>& out_override,
            bool quiet) {
    ExperimentConfig cfg;
    try {
        cfg = load_config_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "run: " << e.what() << "\n";
        return 2;
    }
    // The override only redirects the files; the artifact echoes the config
    // as written, so reruns of one config stay byte-comparable.
    const std::string out_dir = out_override ? *out_override : cfg.output_dir;

    try {
        const TaskSequence seq = build_tasks(cfg.dataset);
        std::filesystem::create_directories(out_dir);
        const std::string timestamp = utc_timestamp();

        for (Method method : cfg.methods) {
            TrainConfig train = cfg.train;
            train.method = method;
            const MethodRunResult result = run_method(seq, cfg.layer_sizes, train);

            const std::string stem =
                (std::filesystem::path(out_dir) / method_name(method)).string();
            write_text_file(stem + ".json",
                            make_result_json(cfg, seq, result, timestamp).dump(2) + "\n");
            write_text_file(stem + ".csv", make_result_csv(result));
            if (!quiet) {
                std::cout << method_name(method) << ": acc=" << result.metrics.acc
                          << " bwt=" << result.metrics.bwt << " -> " << stem << ".json\n";
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "run: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

int cmd_inspect(const std::string& artifact_path) {
    return inspect_artifact(artifact_path, std::cout, std::cerr);
}

int cmd_compare(const std::vector<std::string>& artifact_paths) {
    return compare_artifacts(artifact_paths, std::cout, std::cerr);
}

} // namespace lrfr::cli
