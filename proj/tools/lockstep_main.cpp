#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lockstep/commands.hpp"
#include "lockstep/error.hpp"
#include "lockstep/version.hpp"

namespace {

using lockstep::RunConfig;

// One subcommand's flag bindings. Only options the user actually passed
// override the config file; everything else keeps file values or defaults.
struct Flags {
    std::string config;
    std::string log_dir;
    std::string observations;
    std::string categories;
    std::string out_dir;
    std::string sim_config;
    std::string bundle;
    std::string focal;
    std::string format;
    std::string source_name;
    std::vector<int> windows;
    int lag_radius = 3;
    double threshold = 0.5;
    std::uint64_t seed = 0;

    CLI::Option* o_log = nullptr;
    CLI::Option* o_observations = nullptr;
    CLI::Option* o_categories = nullptr;
    CLI::Option* o_out = nullptr;
    CLI::Option* o_sim_config = nullptr;
    CLI::Option* o_bundle = nullptr;
    CLI::Option* o_focal = nullptr;
    CLI::Option* o_format = nullptr;
    CLI::Option* o_source = nullptr;
    CLI::Option* o_windows = nullptr;
    CLI::Option* o_lag_radius = nullptr;
    CLI::Option* o_threshold = nullptr;
    CLI::Option* o_seed = nullptr;
};

std::string read_file_or_die(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw lockstep::Error("cannot read " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

RunConfig build_config(const Flags& flags) {
    RunConfig config;
    if (!flags.config.empty()) {
        config = lockstep::run_config_from_json(read_file_or_die(flags.config), config);
    }
    auto set = [](CLI::Option* option) { return option != nullptr && option->count() > 0; };
    if (set(flags.o_log)) config.log_dir = flags.log_dir;
    if (set(flags.o_observations)) config.observations_path = flags.observations;
    if (set(flags.o_categories)) config.categories_path = flags.categories;
    if (set(flags.o_out)) config.out_dir = flags.out_dir;
    if (set(flags.o_sim_config)) config.sim_config_path = flags.sim_config;
    if (set(flags.o_bundle)) config.bundle_path = flags.bundle;
    if (set(flags.o_focal)) config.focal_store = flags.focal;
    if (set(flags.o_source)) config.source_name = flags.source_name;
    if (set(flags.o_windows)) config.windows = flags.windows;
    if (set(flags.o_lag_radius)) config.lag_radius = flags.lag_radius;
    if (set(flags.o_threshold)) config.screen_threshold = flags.threshold;
    if (set(flags.o_seed)) config.seed = flags.seed;
    if (set(flags.o_format)) {
        auto format = lockstep::parse_report_format(flags.format);
        if (!format) throw lockstep::Error("unknown --format (expected csv or markdown)");
        config.format = *format;
    }
    return config;
}

void add_config_option(CLI::App* cmd, Flags& flags) {
    cmd->add_option("--config", flags.config, "JSON run config; flags override its fields");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lockstep: price panel surveillance for leader-follower behavior"};
    app.set_version_flag("--version", lockstep::kToolkitVersion);
    app.require_subcommand(1);

    int exit_code = lockstep::kExitOk;

    Flags ingest_flags;
    auto* ingest = app.add_subcommand("ingest", "Append an observation CSV to the log");
    add_config_option(ingest, ingest_flags);
    ingest_flags.o_log = ingest->add_option("--log", ingest_flags.log_dir, "Observation log directory");
    ingest_flags.o_observations = ingest->add_option("--observations,--input", ingest_flags.observations,
                                                     "Observation CSV file to append");
    ingest_flags.o_source =
        ingest->add_option("--source", ingest_flags.source_name, "Manifest label for this segment");
    ingest->callback([&] { exit_code = lockstep::cmd_ingest(build_config(ingest_flags)); });

    Flags collect_flags;
    auto* collect = app.add_subcommand("collect", "Fetch each configured source once and append");
    add_config_option(collect, collect_flags);
    collect_flags.o_log =
        collect->add_option("--log", collect_flags.log_dir, "Observation log directory");
    collect->callback([&] { exit_code = lockstep::cmd_collect(build_config(collect_flags)); });

    Flags simulate_flags;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic panel with ground truth");
    add_config_option(simulate, simulate_flags);
    simulate_flags.o_sim_config = simulate->add_option("--sim-config", simulate_flags.sim_config,
                                                       "Simulation config JSON");
    simulate_flags.o_seed =
        simulate->add_option("--seed", simulate_flags.seed, "Random seed (required; no default)");
    simulate_flags.o_out =
        simulate->add_option("--out", simulate_flags.out_dir, "Output directory");
    simulate->callback([&] { exit_code = lockstep::cmd_simulate(build_config(simulate_flags)); });

    Flags analyze_flags;
    auto* analyze = app.add_subcommand("analyze", "Run the full detection pipeline and render reports");
    add_config_option(analyze, analyze_flags);
    analyze_flags.o_log =
        analyze->add_option("--log", analyze_flags.log_dir, "Observation log directory");
    analyze_flags.o_observations = analyze->add_option(
        "--observations", analyze_flags.observations, "Observation CSV (alternative to --log)");
    analyze_flags.o_categories =
        analyze->add_option("--categories", analyze_flags.categories, "Category CSV or JSONL");
    analyze_flags.o_focal =
        analyze->add_option("--focal", analyze_flags.focal, "Focal store for lag analysis");
    analyze_flags.o_windows = analyze->add_option("--windows", analyze_flags.windows,
                                                  "Cluster windows in days (default 3,7)")
                                  ->delimiter(',');
    analyze_flags.o_lag_radius =
        analyze->add_option("--k,--lag-radius", analyze_flags.lag_radius, "Lag radius in days");
    analyze_flags.o_threshold = analyze->add_option("--threshold", analyze_flags.threshold,
                                                    "Follow screen threshold (fraction)");
    analyze_flags.o_out = analyze->add_option("--out", analyze_flags.out_dir, "Output directory");
    analyze_flags.o_format =
        analyze->add_option("--format", analyze_flags.format, "Report format: csv or markdown");
    analyze->callback([&] { exit_code = lockstep::cmd_analyze(build_config(analyze_flags)); });

    Flags report_flags;
    auto* report = app.add_subcommand("report", "Re-render reports from a saved bundle");
    add_config_option(report, report_flags);
    report_flags.o_bundle =
        report->add_option("--bundle", report_flags.bundle, "bundle.json from a previous analyze");
    report_flags.o_out = report->add_option("--out", report_flags.out_dir, "Output directory");
    report_flags.o_format =
        report->add_option("--format", report_flags.format, "Report format: csv or markdown");
    report->callback([&] { exit_code = lockstep::cmd_report(build_config(report_flags)); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? lockstep::kExitOk : lockstep::kExitError;
    } catch (const lockstep::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return lockstep::kExitError;
    }
    return exit_code;
}
