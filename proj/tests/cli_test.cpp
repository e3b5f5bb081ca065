// End-to-end checks for the curiolab binary: subcommand wiring, exit
// codes, error formatting, and the artifacts each mode leaves behind.
// Every test spawns the real executable (path injected at compile time).

#include <doctest.h>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "curio/config.hpp"
#include "curio/metrics.hpp"

using namespace curio;
namespace fs = std::filesystem;

namespace {

struct cli_result {
    int code = -1;
    std::string output; // stdout and stderr interleaved
};

cli_result run_cli(const std::string& args) {
    const std::string cmd = std::string(CURIOLAB_BIN) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    cli_result res;
    char buf[4096];
    size_t n = 0;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) res.output.append(buf, n);
    const int status = pclose(pipe);
    res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) {
        path = fs::temp_directory_path() / name;
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// A run small enough that a full training finishes in well under a second.
std::string smoke_config_text(const std::string& out_dir) {
    return "algorithm = byol-explore\n"
           "seeds = 0\n"
           "out = " + out_dir + "\n"
           "env.rooms = 1\n"
           "env.cell = 3\n"
           "env.view_radius = 1\n"
           "env.keys = 0\n"
           "env.max_keys = 1\n"
           "env.step_limit = 30\n"
           "wm.embed_n = 6\n"
           "wm.history_m = 8\n"
           "wm.horizon = 3\n"
           "wm.enc_hidden = 12\n"
           "wm.pred_hidden = 12\n"
           "wm.action_embed = 4\n"
           "train.learner_steps = 12\n"
           "train.segment_len = 6\n"
           "train.batch_envs = 2\n"
           "train.eval_every = 5\n"
           "train.eval_episodes = 2\n";
}

std::string write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    return path.string();
}

int count_lines(const std::string& text) {
    int lines = 0;
    for (char c : text)
        if (c == '\n') ++lines;
    if (!text.empty() && text.back() != '\n') ++lines;
    return lines;
}

} // namespace

TEST_CASE("help exits zero and names every subcommand") {
    const cli_result res = run_cli("--help");
    CHECK(res.code == 0);
    CHECK(res.output.find("run") != std::string::npos);
    CHECK(res.output.find("report") != std::string::npos);
    CHECK(res.output.find("sweep") != std::string::npos);
}

TEST_CASE("run trains silently and report prints the artifact paths") {
    TempDir dir("curio_cli_run");
    const std::string cfg = write_file(dir.path / "smoke.cfg",
                                       smoke_config_text((dir.path / "out").string()));

    const cli_result run = run_cli("run --config " + cfg);
    CHECK(run.code == 0);
    CHECK(run.output.empty()); // success is silent; logs live in the CSVs

    const fs::path seed_dir = dir.path / "out" / "seed_0";
    REQUIRE(fs::exists(seed_dir / "manifest.txt"));
    REQUIRE(fs::exists(seed_dir / "training.csv"));
    REQUIRE(fs::exists(seed_dir / "metrics.csv"));
    REQUIRE(fs::exists(seed_dir / "checkpoint.bin"));

    const cli_result rep = run_cli("report --run " + seed_dir.string());
    CHECK(rep.code == 0);
    REQUIRE(count_lines(rep.output) == 3);
    std::stringstream ss(rep.output);
    std::string line;
    std::vector<std::string> printed;
    while (std::getline(ss, line)) printed.push_back(line);
    for (const std::string& p : printed) CHECK(fs::exists(p));
    CHECK(read_text_file(printed[2]).find("agent_score_median") != std::string::npos);
}

TEST_CASE("run --seed replaces the configured seed list") {
    TempDir dir("curio_cli_seed_override");
    std::string text = smoke_config_text((dir.path / "out").string());
    text.replace(text.find("seeds = 0"), 9, "seeds = 0,1");
    const std::string cfg = write_file(dir.path / "smoke.cfg", text);

    const cli_result res = run_cli("run --config " + cfg + " --seed 2");
    CHECK(res.code == 0);
    CHECK(fs::exists(dir.path / "out" / "seed_2"));
    CHECK_FALSE(fs::exists(dir.path / "out" / "seed_0"));
    CHECK_FALSE(fs::exists(dir.path / "out" / "seed_1"));
}

TEST_CASE("run --preset and --out land in the written manifest") {
    TempDir dir("curio_cli_preset");
    const std::string cfg = write_file(dir.path / "smoke.cfg",
                                       smoke_config_text((dir.path / "ignored").string()));

    const std::string out = (dir.path / "actual").string();
    const cli_result res =
        run_cli("run --config " + cfg + " --preset horizon-1 --out " + out);
    CHECK(res.code == 0);
    CHECK_FALSE(fs::exists(dir.path / "ignored"));

    const ExperimentConfig echoed =
        parse_config(read_text_file(out + "/seed_0/manifest.txt"));
    CHECK(echoed.wm.horizon == 1);
    CHECK(echoed.out == out);
}

TEST_CASE("missing arguments and unknown subcommands exit 2 with one error line") {
    const cli_result no_sub = run_cli("");
    CHECK(no_sub.code == 2);
    CHECK(no_sub.output.rfind("error:", 0) == 0);
    CHECK(count_lines(no_sub.output) == 1);

    const cli_result no_config = run_cli("run");
    CHECK(no_config.code == 2);
    CHECK(no_config.output.rfind("error:", 0) == 0);
    CHECK(count_lines(no_config.output) == 1);

    const cli_result unknown = run_cli("frobnicate");
    CHECK(unknown.code == 2);
    CHECK(unknown.output.rfind("error:", 0) == 0);
}

TEST_CASE("config problems exit 1 and name the offender") {
    TempDir dir("curio_cli_bad_config");

    const cli_result missing =
        run_cli("run --config " + (dir.path / "nope.cfg").string());
    CHECK(missing.code == 1);
    CHECK(missing.output.rfind("error:", 0) == 0);
    CHECK(missing.output.find("nope.cfg") != std::string::npos);

    std::string text = smoke_config_text((dir.path / "out").string());
    text.replace(text.find("env.rooms = 1"), 13, "env.rooms = 0");
    const std::string cfg = write_file(dir.path / "bad.cfg", text);
    const cli_result invalid = run_cli("run --config " + cfg);
    CHECK(invalid.code == 1);
    CHECK(invalid.output.find("env.rooms") != std::string::npos);
    CHECK(count_lines(invalid.output) == 1);

    const cli_result preset = run_cli("run --config " + cfg + " --preset mystery");
    CHECK(preset.code == 1);
    CHECK(preset.output.find("mystery") != std::string::npos);
}

TEST_CASE("sweep forks one worker per seed and pins each manifest") {
    TempDir dir("curio_cli_sweep");
    const std::string cfg = write_file(dir.path / "smoke.cfg",
                                       smoke_config_text((dir.path / "out").string()));

    const cli_result res = run_cli("sweep --config " + cfg + " --seeds 1,3");
    CHECK(res.code == 0);
    REQUIRE(fs::exists(dir.path / "out" / "seed_1" / "metrics.csv"));
    REQUIRE(fs::exists(dir.path / "out" / "seed_3" / "metrics.csv"));
    CHECK_FALSE(fs::exists(dir.path / "out" / "seed_0"));

    const ExperimentConfig echoed =
        parse_config(read_text_file((dir.path / "out" / "seed_3" / "manifest.txt").string()));
    CHECK(echoed.seeds == std::vector<int>{3});
}

TEST_CASE("sweep rejects a malformed seed list") {
    TempDir dir("curio_cli_sweep_bad");
    const std::string cfg = write_file(dir.path / "smoke.cfg",
                                       smoke_config_text((dir.path / "out").string()));

    const cli_result res = run_cli("sweep --config " + cfg + " --seeds 1,x,3");
    CHECK(res.code == 1);
    CHECK(res.output.rfind("error:", 0) == 0);
    CHECK(res.output.find("'x'") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.path / "out"));
}

TEST_CASE("SIGINT stops at a segment boundary, marks truncation, exits 130") {
    TempDir dir("curio_cli_interrupt");
    std::string text = smoke_config_text((dir.path / "out").string());
    // Far too long to ever finish on its own; the signal must end it.
    text.replace(text.find("train.learner_steps = 12"), 24,
                 "train.learner_steps = 1000000");
    text.replace(text.find("train.eval_every = 5"), 20,
                 "train.eval_every = 1000000");
    const std::string cfg = write_file(dir.path / "long.cfg", text);

    const pid_t pid = fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
        // The interrupt notice on stderr is expected noise here.
        FILE* muted = freopen("/dev/null", "w", stderr);
        (void)muted;
        execl(CURIOLAB_BIN, CURIOLAB_BIN, "run", "--config", cfg.c_str(),
              static_cast<char*>(nullptr));
        _exit(127); // exec failed
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(400));
    REQUIRE(kill(pid, SIGINT) == 0);
    int status = 0;
    REQUIRE(waitpid(pid, &status, 0) == pid);
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 130);

    const fs::path seed_dir = dir.path / "out" / "seed_0";
    const std::string metrics = read_text_file((seed_dir / "metrics.csv").string());
    const std::string training = read_text_file((seed_dir / "training.csv").string());
    CHECK(metrics.find("truncated") != std::string::npos);
    CHECK(training.find("truncated") != std::string::npos);
    // The partial training log still parses, marker row and all.
    const std::vector<ScoreRecord> scores = parse_score_rows(parse_csv(metrics));
    REQUIRE(!scores.empty());
    CHECK(scores[0].learner_step == 0);
}
