#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lockstep/collect.hpp"
#include "lockstep/report.hpp"

namespace lockstep {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;    // validation / configuration failure
inline constexpr int kExitPartial = 2;  // some collector sources failed

// Everything a command run needs; populated from a JSON config file and/or
// command-line flags (flags win).
struct RunConfig {
    std::filesystem::path log_dir;
    std::filesystem::path observations_path;  // direct CSV input or ingest source
    std::filesystem::path categories_path;
    std::filesystem::path out_dir;
    std::filesystem::path sim_config_path;
    std::filesystem::path bundle_path;
    std::vector<int> windows{3, 7};
    StoreId focal_store;
    int lag_radius = 3;
    double screen_threshold = 0.5;
    ReportFormat format = ReportFormat::csv;
    std::optional<std::uint64_t> seed;
    std::string source_name;  // manifest label for ingested segments
    std::vector<SourceDef> sources;
};

// Loads the JSON config schema (see README) over `base`, leaving fields the
// file does not mention untouched.
RunConfig run_config_from_json(const std::string& text, RunConfig base);

// Each command returns a process exit code and throws Error for validation
// failures (mapped to kExitError by the caller).
int cmd_ingest(const RunConfig& config);
int cmd_collect(const RunConfig& config);
int cmd_simulate(const RunConfig& config);
int cmd_analyze(const RunConfig& config);
int cmd_report(const RunConfig& config);

}  // namespace lockstep
