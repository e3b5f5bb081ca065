// Command-line entry point: `run` trains the configured seeds, `report`
// turns a run directory into plots and a summary, `sweep` launches one
// worker process per seed. Errors come out as a single `error: ...` line
// on stderr with a nonzero exit code.

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "curio/config.hpp"
#include "curio/errors.hpp"
#include "curio/experiment.hpp"
#include "curio/metrics.hpp"
#include "curio/report.hpp"

namespace {

std::atomic<bool> g_stop{false};

void handle_sigint(int) { g_stop.store(true); }

std::vector<int> parse_seed_list(const std::string& arg) {
    std::vector<int> seeds;
    std::string item;
    std::stringstream ss(arg);
    while (std::getline(ss, item, ',')) {
        size_t pos = 0;
        int v = 0;
        try {
            v = std::stoi(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != item.size() || item.empty()) {
            throw curio::UsageError("cannot parse seed list entry '" + item + "'");
        }
        seeds.push_back(v);
    }
    if (seeds.empty()) throw curio::UsageError("seed list is empty");
    return seeds;
}

curio::ExperimentConfig load_config(const std::string& path, const std::string& preset,
                                    const std::string& out_override) {
    curio::ExperimentConfig cfg = curio::parse_config(curio::read_text_file(path));
    if (!preset.empty()) curio::apply_preset(cfg, preset);
    if (!out_override.empty()) cfg.out = out_override;
    curio::validate_config(cfg);
    return cfg;
}

int run_command(const std::string& config_path, const std::string& preset, bool seed_set,
                int seed, const std::string& out_override) {
    curio::ExperimentConfig cfg = load_config(config_path, preset, out_override);
    if (seed_set) {
        cfg.seeds = {seed};
        curio::validate_config(cfg);
    }
    std::signal(SIGINT, handle_sigint);
    curio::run_experiment(cfg, &g_stop);
    if (g_stop.load()) {
        std::fprintf(stderr, "error: interrupted: partial CSV retained with truncation marker\n");
        return 130;
    }
    return 0;
}

int report_command(const std::string& run_dir) {
    const curio::ReportPaths paths = curio::emit_report(run_dir);
    std::printf("%s\n%s\n%s\n", paths.return_curve.c_str(), paths.rooms_curve.c_str(),
                paths.summary.c_str());
    return 0;
}

int sweep_command(const std::string& config_path, const std::string& seeds_arg,
                  const std::string& out_override) {
    curio::ExperimentConfig cfg = load_config(config_path, "", out_override);
    cfg.seeds = parse_seed_list(seeds_arg);
    curio::validate_config(cfg);

    std::signal(SIGINT, handle_sigint); // inherited by the workers
    std::fflush(stdout);
    std::fflush(stderr);

    std::vector<std::pair<int, pid_t>> workers;
    for (int seed : cfg.seeds) {
        const pid_t pid = fork();
        if (pid < 0) {
            std::fprintf(stderr, "error: fork failed for seed %d\n", seed);
            return 1;
        }
        if (pid == 0) {
            int code = 0;
            try {
                curio::run_seed(cfg, seed, cfg.out + "/seed_" + std::to_string(seed), &g_stop);
                if (g_stop.load()) code = 130;
            } catch (const std::exception& e) {
                std::fprintf(stderr, "error: seed %d: %s\n", seed, e.what());
                code = 1;
            }
            std::fflush(stderr);
            _exit(code);
        }
        workers.emplace_back(seed, pid);
    }

    int rc = 0;
    for (const auto& [seed, pid] : workers) {
        int status = 0;
        if (waitpid(pid, &status, 0) < 0 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
            std::fprintf(stderr, "error: worker for seed %d exited abnormally\n", seed);
            rc = 1;
        }
    }
    return rc;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"curiosity-driven exploration laboratory"};
    app.require_subcommand(1);

    std::string config_path, preset, out_override, run_dir, seeds_arg;
    int seed = 0;

    CLI::App* run = app.add_subcommand("run", "train every configured seed");
    run->add_option("--config", config_path, "experiment config file")->required();
    CLI::Option* preset_opt = run->add_option("--preset", preset, "ablation preset to apply");
    CLI::Option* seed_opt = run->add_option("--seed", seed, "train only this seed");
    run->add_option("--out", out_override, "override the output directory");

    CLI::App* report = app.add_subcommand("report", "plots and summary for a run directory");
    report->add_option("--run", run_dir, "run output directory")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "one worker process per seed");
    sweep->add_option("--config", config_path, "experiment config file")->required();
    sweep->add_option("--seeds", seeds_arg, "comma-separated seed list")->required();
    sweep->add_option("--out", out_override, "override the output directory");

    try {
        app.parse(argc, argv);
        if (run->parsed()) {
            return run_command(config_path, preset_opt->count() ? preset : "",
                               seed_opt->count() > 0, seed, out_override);
        }
        if (report->parsed()) return report_command(run_dir);
        return sweep_command(config_path, seeds_arg, out_override);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
