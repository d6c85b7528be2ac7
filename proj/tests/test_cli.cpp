#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "lockstep/synth.hpp"
#include "support/scenarios.hpp"
#include "support/test_util.hpp"

using namespace lockstep;
using testutil::TempDir;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr interleaved
};

// Runs the built binary through the shell. Paths in this suite come from
// mkdtemp, so plain concatenation is shell-safe.
RunResult run_cli(const std::string& args) {
    const std::string command = std::string(LOCKSTEP_CLI_BIN) + " " + args + " 2>&1";
    FILE* pipe = ::popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult result;
    char buffer[4096];
    std::size_t n = 0;
    while ((n = ::fread(buffer, 1, sizeof buffer, pipe)) > 0) {
        result.output.append(buffer, n);
    }
    const int status = ::pclose(pipe);
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    result.exit_code = WEXITSTATUS(status);
    return result;
}

std::string quoted(const std::filesystem::path& path) { return path.string(); }

// Reduced injection scenario: same cast and behaviors as the frozen one but
// a shorter horizon, to keep the CLI round trips quick.
std::string small_injection_json() {
    auto config = scenarios::injection_config();
    config.horizon_days = 60;
    config.item_counts[CategoryLabel::random] = 30;
    return synth::sim_config_to_json(config);
}

std::map<std::string, std::string> read_tree(const std::filesystem::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        files[std::filesystem::relative(entry.path(), dir).string()] =
            testutil::read_file(entry.path());
    }
    return files;
}

}  // namespace

TEST_CASE("version and usage basics") {
    CHECK(run_cli("--version").exit_code == 0);

    auto help = run_cli("--help");
    CHECK(help.exit_code == 0);
    CHECK(help.output.find("analyze") != std::string::npos);

    auto bare = run_cli("");
    CHECK(bare.exit_code == 1);

    auto unknown = run_cli("frobnicate");
    CHECK(unknown.exit_code == 1);
}

TEST_CASE("simulate demands an explicit seed") {
    TempDir tmp;
    testutil::write_file(tmp.path() / "sim.json", small_injection_json());
    auto result = run_cli("simulate --sim-config " + quoted(tmp.path() / "sim.json") + " --out " +
                          quoted(tmp.path() / "out"));
    CHECK(result.exit_code == 1);
    CHECK(result.output.find("refusing to pick one silently") != std::string::npos);
}

TEST_CASE("simulate writes the panel, categories, and ground truth") {
    TempDir tmp;
    testutil::write_file(tmp.path() / "sim.json", small_injection_json());
    auto result = run_cli("simulate --sim-config " + quoted(tmp.path() / "sim.json") +
                          " --seed 41 --out " + quoted(tmp.path() / "out"));
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("simulated panel: stores=10 items=30 days=60") != std::string::npos);
    CHECK(std::filesystem::is_regular_file(tmp.path() / "out" / "observations.csv"));
    CHECK(std::filesystem::is_regular_file(tmp.path() / "out" / "categories.csv"));
    CHECK(std::filesystem::is_regular_file(tmp.path() / "out" / "ground_truth.jsonl"));
}

TEST_CASE("repeated runs produce byte-identical trees") {
    TempDir tmp;
    testutil::write_file(tmp.path() / "sim.json", small_injection_json());
    const std::string base = "simulate --sim-config " + quoted(tmp.path() / "sim.json") +
                             " --seed 41 --out ";
    REQUIRE(run_cli(base + quoted(tmp.path() / "sim-a")).exit_code == 0);
    REQUIRE(run_cli(base + quoted(tmp.path() / "sim-b")).exit_code == 0);
    CHECK(read_tree(tmp.path() / "sim-a") == read_tree(tmp.path() / "sim-b"));

    const std::string analyze = "analyze --observations " +
                                quoted(tmp.path() / "sim-a" / "observations.csv") +
                                " --categories " + quoted(tmp.path() / "sim-a" / "categories.csv") +
                                " --focal " + scenarios::kInjectionFocal + " --out ";
    REQUIRE(run_cli(analyze + quoted(tmp.path() / "rep-a")).exit_code == 0);
    REQUIRE(run_cli(analyze + quoted(tmp.path() / "rep-b")).exit_code == 0);
    auto tree = read_tree(tmp.path() / "rep-a");
    CHECK(tree == read_tree(tmp.path() / "rep-b"));
    CHECK(tree.count("bundle.json") == 1);
    CHECK(tree.count("table1_all_all.csv") == 1);
}

TEST_CASE("the pipeline recovers a planted follower end to end") {
    TempDir tmp;
    testutil::write_file(tmp.path() / "sim.json", small_injection_json());
    REQUIRE(run_cli("simulate --sim-config " + quoted(tmp.path() / "sim.json") +
                    " --seed 41 --out " + quoted(tmp.path() / "sim"))
                .exit_code == 0);

    auto result = run_cli("analyze --observations " +
                          quoted(tmp.path() / "sim" / "observations.csv") + " --categories " +
                          quoted(tmp.path() / "sim" / "categories.csv") + " --focal " +
                          scenarios::kInjectionFocal + " --k 3 --threshold 0.5 --out " +
                          quoted(tmp.path() / "rep"));
    REQUIRE(result.exit_code == 0);

    const auto screen = testutil::read_file(tmp.path() / "rep" / "screen_random.csv");
    auto lines = std::vector<std::string>{};
    std::size_t start = 0;
    while (start < screen.size()) {
        const auto end = screen.find('\n', start);
        lines.push_back(screen.substr(start, end - start));
        if (end == std::string::npos) break;
        start = end + 1;
    }
    REQUIRE(lines.size() == 2);  // header + exactly one hit
    CHECK(lines[0] == "store_id,peak_day,peak_fraction");
    CHECK(lines[1].rfind(std::string(scenarios::kInjectionFollower) + ",1,0.", 0) == 0);
    const double fraction = std::stod(lines[1].substr(lines[1].rfind(',') + 1));
    CHECK(fraction > 0.8);
}

TEST_CASE("ingest reports malformed input with file and line") {
    TempDir tmp;
    testutil::write_file(tmp.path() / "bad.csv",
                         "date,store_id,item_id,price_cents\n"
                         "2000-13-40,alpha,book-1,1000\n");
    auto result = run_cli("ingest --log " + quoted(tmp.path() / "log") + " --observations " +
                          quoted(tmp.path() / "bad.csv"));
    CHECK(result.exit_code == 1);
    CHECK(result.output.find("error:") != std::string::npos);
    CHECK(result.output.find("bad.csv") != std::string::npos);
    CHECK(result.output.find("line 2") != std::string::npos);
}

TEST_CASE("ingesting the same file twice dedups on replay") {
    TempDir tmp;
    testutil::write_file(tmp.path() / "obs.csv",
                         "date,store_id,item_id,price_cents\n"
                         "2000-01-03,alpha,book-1,1000\n"
                         "2000-01-04,alpha,book-1,1100\n"
                         "2000-01-05,alpha,book-1,1100\n");

    const std::string ingest = "ingest --log " + quoted(tmp.path() / "log") +
                               " --observations " + quoted(tmp.path() / "obs.csv");
    auto first = run_cli(ingest);
    CHECK(first.exit_code == 0);
    CHECK(first.output.find("appended segments/seg-000001.csv (3 observations)") !=
          std::string::npos);
    CHECK(first.output.find("observations=3") != std::string::npos);

    auto second = run_cli(ingest);
    CHECK(second.exit_code == 0);
    CHECK(second.output.find("appended segments/seg-000002.csv (3 observations)") !=
          std::string::npos);
    // The merged panel still holds three observations, not six.
    CHECK(second.output.find("observations=3") != std::string::npos);

    auto analyzed = run_cli("analyze --log " + quoted(tmp.path() / "log") + " --out " +
                            quoted(tmp.path() / "rep"));
    CHECK(analyzed.exit_code == 0);
    CHECK(analyzed.output.find("changes: 1") != std::string::npos);
}

TEST_CASE("analyze works on an empty panel") {
    TempDir tmp;
    testutil::write_file(tmp.path() / "empty.csv", "date,store_id,item_id,price_cents\n");
    auto result = run_cli("analyze --observations " + quoted(tmp.path() / "empty.csv") +
                          " --focal nobody --out " + quoted(tmp.path() / "rep"));
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("changes: 0") != std::string::npos);

    const auto metadata = testutil::read_file(tmp.path() / "rep" / "metadata.csv");
    CHECK(metadata.find("date_min,n/a") != std::string::npos);
    CHECK(metadata.find("table5_random_all: focal store has no price changes") !=
          std::string::npos);
}

TEST_CASE("analyze rejects an unknown focal store on a populated panel") {
    TempDir tmp;
    testutil::write_file(tmp.path() / "obs.csv",
                         "date,store_id,item_id,price_cents\n"
                         "2000-01-03,alpha,book-1,1000\n");
    auto result = run_cli("analyze --observations " + quoted(tmp.path() / "obs.csv") +
                          " --focal ghost --out " + quoted(tmp.path() / "rep"));
    CHECK(result.exit_code == 1);
    CHECK(result.output.find("unknown focal store: ghost") != std::string::npos);
}

TEST_CASE("analyze validates windows and lag radius") {
    TempDir tmp;
    testutil::write_file(tmp.path() / "obs.csv", "date,store_id,item_id,price_cents\n");
    auto zero_window = run_cli("analyze --observations " + quoted(tmp.path() / "obs.csv") +
                               " --windows 0 --out " + quoted(tmp.path() / "rep"));
    CHECK(zero_window.exit_code == 1);
    CHECK(zero_window.output.find("at least 1 day") != std::string::npos);

    auto zero_k = run_cli("analyze --observations " + quoted(tmp.path() / "obs.csv") +
                          " --k 0 --out " + quoted(tmp.path() / "rep"));
    CHECK(zero_k.exit_code == 1);
    CHECK(zero_k.output.find("lag radius") != std::string::npos);
}

TEST_CASE("collect returns the partial-failure exit code when any source fails") {
    TempDir tmp;
    testutil::write_file(tmp.path() / "snap.csv",
                         "date,store_id,item_id,price_cents\n"
                         "2000-01-03,alpha,book-1,1000\n");
    const std::string config = std::string("{\n") +
                               "  \"log_dir\": \"" + (tmp.path() / "log").string() + "\",\n" +
                               "  \"sources\": [\n" +
                               "    {\"name\": \"good\", \"endpoint\": \"file:" +
                               (tmp.path() / "snap.csv").string() +
                               "\", \"parser\": \"observation_csv\"},\n" +
                               "    {\"name\": \"down\", \"endpoint\": \"http://127.0.0.1:1/x\", " +
                               "\"parser\": \"observation_csv\"}\n" +
                               "  ]\n}\n";
    testutil::write_file(tmp.path() / "run.json", config);

    auto result = run_cli("collect --config " + quoted(tmp.path() / "run.json"));
    CHECK(result.exit_code == 2);
    CHECK(result.output.find("source good: appended") != std::string::npos);
    CHECK(result.output.find("source down: FAILED") != std::string::npos);

    // The good source is replayable despite the failure.
    auto analyzed = run_cli("analyze --log " + quoted(tmp.path() / "log") + " --out " +
                            quoted(tmp.path() / "rep"));
    CHECK(analyzed.exit_code == 0);
    CHECK(analyzed.output.find("observations=1") != std::string::npos);
}

TEST_CASE("report re-renders a saved bundle without recomputation") {
    TempDir tmp;
    testutil::write_file(tmp.path() / "sim.json", small_injection_json());
    REQUIRE(run_cli("simulate --sim-config " + quoted(tmp.path() / "sim.json") +
                    " --seed 41 --out " + quoted(tmp.path() / "sim"))
                .exit_code == 0);
    REQUIRE(run_cli("analyze --observations " + quoted(tmp.path() / "sim" / "observations.csv") +
                    " --categories " + quoted(tmp.path() / "sim" / "categories.csv") +
                    " --focal " + scenarios::kInjectionFocal + " --format markdown --out " +
                    quoted(tmp.path() / "rep"))
                .exit_code == 0);

    auto rerender = run_cli("report --bundle " + quoted(tmp.path() / "rep" / "bundle.json") +
                            " --format markdown --out " + quoted(tmp.path() / "rep2"));
    CHECK(rerender.exit_code == 0);

    auto original = read_tree(tmp.path() / "rep");
    auto again = read_tree(tmp.path() / "rep2");
    CHECK(original.count("report.md") == 1);
    for (const auto& [name, bytes] : again) {
        REQUIRE(original.count(name) == 1);
        CHECK_MESSAGE(original.at(name) == bytes, ("re-rendered file differs: " + name));
    }

    // Missing bundle is a plain validation error.
    auto missing = run_cli("report --bundle " + quoted(tmp.path() / "nope.json") + " --out " +
                           quoted(tmp.path() / "rep3"));
    CHECK(missing.exit_code == 1);
    CHECK(missing.output.find("cannot read") != std::string::npos);
}

TEST_CASE("flags override the run config file") {
    TempDir tmp;
    testutil::write_file(tmp.path() / "obs.csv",
                         "date,store_id,item_id,price_cents\n"
                         "2000-01-03,alpha,book-1,1000\n"
                         "2000-01-05,alpha,book-1,1200\n"
                         "2000-01-20,alpha,book-1,1100\n");
    const std::string config = std::string("{\n") +
                               "  \"observations\": \"" + (tmp.path() / "obs.csv").string() +
                               "\",\n  \"out_dir\": \"" + (tmp.path() / "rep").string() +
                               "\",\n  \"windows\": [3]\n}\n";
    testutil::write_file(tmp.path() / "run.json", config);

    // Config alone: one window row.
    REQUIRE(run_cli("analyze --config " + quoted(tmp.path() / "run.json")).exit_code == 0);
    auto table2 = testutil::read_file(tmp.path() / "rep" / "table2_all_all.csv");
    CHECK(table2.find("\n3,") != std::string::npos);
    CHECK(table2.find("\n7,") == std::string::npos);

    // The flag overrides the file's windows and output directory.
    REQUIRE(run_cli("analyze --config " + quoted(tmp.path() / "run.json") +
                    " --windows 3,7 --out " + quoted(tmp.path() / "rep2"))
                .exit_code == 0);
    auto overridden = testutil::read_file(tmp.path() / "rep2" / "table2_all_all.csv");
    CHECK(overridden.find("\n3,") != std::string::npos);
    CHECK(overridden.find("\n7,") != std::string::npos);
}

TEST_CASE("simulate can take its seed from the run config file") {
    TempDir tmp;
    testutil::write_file(tmp.path() / "sim.json", small_injection_json());
    const std::string config = std::string("{\n") +
                               "  \"sim_config\": \"" + (tmp.path() / "sim.json").string() +
                               "\",\n  \"out_dir\": \"" + (tmp.path() / "out").string() +
                               "\",\n  \"seed\": 41\n}\n";
    testutil::write_file(tmp.path() / "run.json", config);

    auto result = run_cli("simulate --config " + quoted(tmp.path() / "run.json"));
    CHECK(result.exit_code == 0);

    // Same seed through the flag path produces the same bytes.
    REQUIRE(run_cli("simulate --sim-config " + quoted(tmp.path() / "sim.json") +
                    " --seed 41 --out " + quoted(tmp.path() / "out2"))
                .exit_code == 0);
    CHECK(testutil::read_file(tmp.path() / "out" / "observations.csv") ==
          testutil::read_file(tmp.path() / "out2" / "observations.csv"));
}

TEST_CASE("a one-day horizon produces a changeless panel that still analyzes") {
    TempDir tmp;
    auto config = scenarios::injection_config();
    config.horizon_days = 1;
    config.item_counts[CategoryLabel::random] = 3;
    testutil::write_file(tmp.path() / "sim.json", synth::sim_config_to_json(config));

    REQUIRE(run_cli("simulate --sim-config " + quoted(tmp.path() / "sim.json") +
                    " --seed 7 --out " + quoted(tmp.path() / "sim"))
                .exit_code == 0);
    auto result = run_cli("analyze --observations " +
                          quoted(tmp.path() / "sim" / "observations.csv") + " --out " +
                          quoted(tmp.path() / "rep"));
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("changes: 0") != std::string::npos);
}
