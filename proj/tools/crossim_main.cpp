// crossim command-line front end: one subcommand per pipeline stage plus
// whole-pipeline and replay entry points.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "crossim/config.hpp"
#include "crossim/errors.hpp"
#include "crossim/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitExecution = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cross-simulator road test generation, migration, and evaluation"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "experiment config file (INI sections)")
        ->required();
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = app.add_option("--seed", seed, "override experiment.global_seed");
    std::string out_dir;
    CLI::Option* out_opt = app.add_option("--out", out_dir, "override experiment.output_dir");
    int jobs = -1;
    CLI::Option* jobs_opt =
        app.add_option("--jobs", jobs, "worker threads (0 = hardware)")->check(CLI::NonNegativeNumber);
    std::string stage_cache = "on";
    app.add_option("--stage-cache", stage_cache, "reuse completed stage artifacts")
        ->check(CLI::IsMember({"on", "off"}));

    CLI::App* cmd_search = app.add_subcommand("search", "per-sibling illumination search");
    CLI::App* cmd_migrate =
        app.add_subcommand("migrate", "cross-simulator migration and union maps");
    CLI::App* cmd_merge = app.add_subcommand("merge", "conservative sibling merge");
    CLI::App* cmd_evaluate = app.add_subcommand("evaluate", "twin ground truth and report");
    CLI::App* cmd_report = app.add_subcommand("report", "tables and heatmaps");
    CLI::App* cmd_replay = app.add_subcommand("replay", "re-execute one recorded test");
    std::string test_id;
    cmd_replay->add_option("test_id", test_id, "test id to replay")->required();
    CLI::App* cmd_pipeline = app.add_subcommand("pipeline", "all stages in order");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        crossim::ExperimentConfig cfg = crossim::load_experiment_config(config_path);
        if (*seed_opt) cfg.global_seed = seed;
        if (*out_opt) cfg.output_dir = out_dir;
        if (*jobs_opt) cfg.jobs = jobs;

        crossim::Pipeline pipeline(cfg, cfg.output_dir, stage_cache == "on");
        if (cmd_search->parsed()) {
            pipeline.run_search();
            std::cout << "search: done (" << pipeline.out_dir().string() << ")\n";
        } else if (cmd_migrate->parsed()) {
            pipeline.run_migrate_union();
            std::cout << "migrate: union maps written\n";
        } else if (cmd_merge->parsed()) {
            pipeline.run_merge();
            std::cout << "merge: sibling maps merged\n";
        } else if (cmd_evaluate->parsed()) {
            pipeline.run_evaluate();
            std::cout << "evaluate: report written\n";
        } else if (cmd_report->parsed()) {
            pipeline.run_report();
            std::cout << "report: tables and heatmaps written\n";
        } else if (cmd_replay->parsed()) {
            const int n = pipeline.replay(test_id);
            std::cout << "replay: " << n << " instance(s) verified\n";
        } else if (cmd_pipeline->parsed()) {
            pipeline.run_all();
            std::cout << "pipeline: all stages done (" << pipeline.out_dir().string() << ")\n";
        }
        return kExitOk;
    } catch (const crossim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitExecution;
    }
}
