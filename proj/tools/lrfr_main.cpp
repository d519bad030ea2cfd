#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lrfr/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Continual-learning experiments with null-space projected updates"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    bool quiet = false;
    CLI::App* run = app.add_subcommand("run", "run an experiment from a JSON config");
    run->add_option("--config", config_path, "experiment config file")->required();
    CLI::Option* out_opt = run->add_option("--out", out_dir, "override the output directory");
    run->add_flag("--quiet", quiet, "suppress per-method summary lines");

    std::string artifact_path;
    CLI::App* inspect = app.add_subcommand("inspect", "print the rank/null-dim table of a result");
    inspect->add_option("artifact", artifact_path, "result JSON file")->required();

    std::vector<std::string> compare_paths;
    CLI::App* compare = app.add_subcommand("compare", "compare result artifacts");
    compare->add_option("artifacts", compare_paths, "result JSON files")
        ->required()
        ->expected(2, -1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (run->parsed()) {
        std::optional<std::string> out_override;
        if (out_opt->count() > 0) out_override = out_dir;
        return lrfr::cli::cmd_run(config_path, out_override, quiet);
    }
    if (inspect->parsed()) return lrfr::cli::cmd_inspect(artifact_path);
    if (compare->parsed()) return lrfr::cli::cmd_compare(compare_paths);
    return 1;
}
