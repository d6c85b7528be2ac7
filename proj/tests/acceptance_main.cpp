// Acceptance harness: every release gate in one binary, one PASS/FAIL line
// per criterion. Exit code is the number of failed criteria.
//
// Criteria 6 and 7 compare against frozen baselines derived from the fixed
// seeds in support/scenarios.hpp. To reprint the measured values (after an
// intentional generator change), run with LOCKSTEP_ACCEPT_BASELINE=1 and
// paste the block into the constants below.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "lockstep/clusters.hpp"
#include "lockstep/error.hpp"
#include "lockstep/leadership.hpp"
#include "lockstep/panel.hpp"
#include "lockstep/report.hpp"
#include "lockstep/rng.hpp"
#include "lockstep/synth.hpp"
#include "support/fixture_bundle.hpp"
#include "support/scenarios.hpp"
#include "support/test_util.hpp"

using namespace lockstep;

namespace {

// ---- frozen baselines (derived from the scenario seeds; see file header) ---

struct InjectionBaseline {
    // Follower's d=+1 lag cell against the focal store.
    std::int64_t follower_numerator;
    std::int64_t follower_denominator;
    // The single expected screen hit, as rendered: store,peak_day,fraction.
    const char* screen_line;
    // Per-store peak fraction over d in [0,+3], %.6f, sorted by store id,
    // focal excluded.
    const char* peak_block;
};

constexpr InjectionBaseline kInjectionBaseline{
    314,
    348,
    "shadow-books,1,0.902",
    "indie-01,3,0.031609\n"
    "indie-02,1,0.028736\n"
    "indie-03,3,0.031609\n"
    "indie-04,2,0.017241\n"
    "indie-05,3,0.028736\n"
    "indie-06,1,0.025862\n"
    "indie-07,2,0.037356\n"
    "indie-08,2,0.025862\n"
    "shadow-books,1,0.902299\n",
};

struct ConfoundBaseline {
    int transitions;        // list transitions checked in the bestseller strata
    std::int64_t changes;   // total changes extracted from the confound panel
};

constexpr ConfoundBaseline kConfoundBaseline{192, 2030};

// ---- harness plumbing ------------------------------------------------------

bool baseline_mode() { return std::getenv("LOCKSTEP_ACCEPT_BASELINE") != nullptr; }

struct Criterion {
    int number;
    const char* title;
    double budget_seconds;
    std::function<std::optional<std::string>()> body;
};

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

// ---- criterion 1: segmentation oracle over change-date sequences -----------

std::optional<std::string> criterion_segmentation_oracle() {
    SplitRng root(90001);
    for (int round = 0; round < 1000; ++round) {
        SplitRng rng = root.stream("seq", static_cast<std::uint64_t>(round));
        const int days = 1 + static_cast<int>(rng.next_int(0, 364));
        const int target = static_cast<int>(rng.next_int(0, 200));

        // Distinct (store, date) pairs on a single item.
        std::set<std::pair<int, int>> picks;
        for (int n = 0; n < target; ++n) {
            picks.insert({static_cast<int>(rng.next_int(0, days - 1)),
                          static_cast<int>(rng.next_int(0, 4))});
        }
        std::vector<PriceChange> changes;
        for (const auto& [date, store] : picks) {
            changes.push_back(testutil::change("store-" + std::to_string(store), "item", date,
                                               1000, 1100, 0));
        }

        for (int window : {1, 2, 3, 7}) {
            const auto got = segment_clusters(changes, Window{window});
            const auto want = testutil::oracle_segment(changes, window);
            if (got.size() != want.size()) {
                return fmt("round %d window %d: %zu clusters vs oracle %zu", round, window,
                           got.size(), want.size());
            }
            for (std::size_t i = 0; i < got.size(); ++i) {
                if (got[i].first_date != want[i].first || got[i].last_date != want[i].last ||
                    got[i].changes.size() != want[i].change_count ||
                    got[i].distinct_stores.size() != want[i].stores.size()) {
                    return fmt("round %d window %d cluster %zu: mismatch", round, window, i);
                }
            }
        }
    }
    return std::nullopt;
}

// ---- criterion 2: conservation and window monotonicity ---------------------

std::optional<std::string> criterion_conservation() {
    SplitRng root(90002);
    for (int round = 0; round < 200; ++round) {
        SplitRng rng = root.stream("panel", static_cast<std::uint64_t>(round));
        const PricePanel panel = testutil::random_panel(rng, 6, 6, 40);
        const ChangeLog log = extract_changes(panel);

        std::map<int, std::size_t> cluster_counts;
        for (int window : {1, 2, 3, 7, 14}) {
            const auto clusters = segment_all_items(log, Window{window});
            std::size_t covered = 0;
            for (const auto& cluster : clusters) covered += cluster.changes.size();
            if (covered != log.size()) {
                return fmt("round %d window %d: clusters cover %zu of %zu changes", round, window,
                           covered, log.size());
            }
            cluster_counts[window] = clusters.size();
        }
        if (cluster_counts[7] > cluster_counts[3]) {
            return fmt("round %d: clusters(7)=%zu exceeds clusters(3)=%zu", round,
                       cluster_counts[7], cluster_counts[3]);
        }
    }
    return std::nullopt;
}

// ---- criterion 3: direction split on every histogram -----------------------

std::optional<std::string> criterion_direction_split() {
    SplitRng root(90003);
    for (int round = 0; round < 200; ++round) {
        SplitRng rng = root.stream("panel", static_cast<std::uint64_t>(round));
        const PricePanel panel = testutil::random_panel(rng, 6, 6, 40);
        const ChangeLog log = extract_changes(panel);
        for (int window : {1, 3, 7}) {
            const auto hist = store_count_histogram(segment_all_items(log, Window{window}));
            for (int b = 0; b < StoreCountHistogram::kBucketCount; ++b) {
                const auto& bucket = hist.buckets[static_cast<std::size_t>(b)];
                if (bucket.changes_up + bucket.changes_down != bucket.total_changes) {
                    return fmt("round %d window %d bucket %s: %lld + %lld != %lld", round, window,
                               std::string(StoreCountHistogram::bucket_name(b)).c_str(),
                               static_cast<long long>(bucket.changes_up),
                               static_cast<long long>(bucket.changes_down),
                               static_cast<long long>(bucket.total_changes));
                }
            }
        }
    }
    return std::nullopt;
}

// ---- criterion 4: leader-ratio arithmetic ----------------------------------

std::optional<std::string> criterion_ratio_arithmetic() {
    struct Case {
        std::int64_t single;
        std::int64_t multiple;
        const char* expected;
    };
    const Case cases[] = {{21, 147, "0.143"}, {265, 176, "1.506"}, {136, 70, "1.943"}};
    for (const auto& c : cases) {
        InitiatorStats stats;
        stats.store_id = "store";
        stats.single_count = c.single;
        stats.first_of_multiple_count = c.multiple;
        const auto ratio = leader_ratio(stats).ratio;
        if (!ratio) return fmt("%lld/%lld: ratio undefined", (long long)c.single, (long long)c.multiple);
        const std::string rendered = fmt("%.3f", *ratio);
        if (rendered != c.expected) {
            return fmt("%lld/%lld: got %s want %s", (long long)c.single, (long long)c.multiple,
                       rendered.c_str(), c.expected);
        }
    }
    return std::nullopt;
}

// ---- criterion 5: lag-table oracle over random panels ----------------------

std::optional<std::string> criterion_lag_oracle() {
    SplitRng root(90005);
    int usable = 0;
    for (int round = 0; usable < 100; ++round) {
        if (round > 2000) return fmt("generator starved after %d rounds", round);
        SplitRng rng = root.stream("panel", static_cast<std::uint64_t>(round));
        const PricePanel panel = testutil::random_panel(rng, 10, 20, 60);
        const ChangeLog log = extract_changes(panel);
        if (log.empty()) continue;
        const CarriedMap carried = default_carried(panel);
        const StoreId focal = log.changes().front().store_id;
        const int k = 3;

        const LagTable table = lag_distribution(log, focal, k, carried);
        const testutil::OracleLag oracle = testutil::oracle_lag(log, focal, k, carried);
        if (table.rows.size() != oracle.num.size()) {
            return fmt("round %d: %zu rows vs oracle %zu", round, table.rows.size(),
                       oracle.num.size());
        }
        for (const auto& row : table.rows) {
            const auto num_it = oracle.num.find(row.store_id);
            if (num_it == oracle.num.end()) {
                return fmt("round %d: unexpected row %s", round, row.store_id.c_str());
            }
            const auto& den = oracle.den.at(row.store_id);
            for (int d = -k; d <= k; ++d) {
                const auto& cell = row.cells[static_cast<std::size_t>(d + k)];
                const auto j = static_cast<std::size_t>(d + k);
                if (cell.numerator != num_it->second[j] || cell.denominator != den[j]) {
                    return fmt("round %d store %s d=%+d: %lld/%lld vs oracle %lld/%lld", round,
                               row.store_id.c_str(), d, (long long)cell.numerator,
                               (long long)cell.denominator, (long long)num_it->second[j],
                               (long long)den[j]);
                }
                const double fraction =
                    cell.denominator == 0
                        ? 0.0
                        : static_cast<double>(cell.numerator) / static_cast<double>(cell.denominator);
                if (cell.fraction() != fraction) {
                    return fmt("round %d store %s d=%+d: fraction mismatch", round,
                               row.store_id.c_str(), d);
                }
            }
        }
        ++usable;
    }
    return std::nullopt;
}

// ---- criterion 6: injection and recovery ------------------------------------

std::optional<std::string> criterion_injection_recovery() {
    auto config = scenarios::injection_config();
    const auto result = synth::simulate(config, scenarios::kInjectionSeed);
    const ChangeLog log = extract_changes(result.panel);
    const CarriedMap carried = default_carried(result.panel);

    const LagTable table = lag_distribution(log, scenarios::kInjectionFocal,
                                            scenarios::kInjectionRadius, carried);

    // Measured values, for the baseline block and the exact comparisons.
    const LagCell& follower_cell = table.cell(scenarios::kInjectionFollower, 1);
    std::string peak_block;
    for (const auto& row : table.rows) {
        if (row.store_id == table.focal_store) continue;
        int peak_day = 0;
        double peak = -1.0;
        for (int d = 0; d <= table.k; ++d) {
            const double f = table.cell(row.store_id, d).fraction();
            if (f > peak) {
                peak = f;
                peak_day = d;
            }
        }
        peak_block += fmt("%s,%d,%.6f\n", row.store_id.c_str(), peak_day, peak);
    }
    const auto hits = follow_screen(table, scenarios::kInjectionThreshold);
    std::string screen_line = hits.size() == 1
                                  ? fmt("%s,%d,%.3f", hits[0].store_id.c_str(), hits[0].peak_day,
                                        hits[0].peak_fraction)
                                  : fmt("<%zu hits>", hits.size());

    if (baseline_mode()) {
        std::printf("--- injection baseline ---\n");
        std::printf("follower d+1 cell: %lld/%lld\n", (long long)follower_cell.numerator,
                    (long long)follower_cell.denominator);
        std::printf("screen line: %s\n", screen_line.c_str());
        std::printf("peak block:\n%s", peak_block.c_str());
    }

    // Threshold conditions stated by the gate.
    if (follower_cell.fraction() <= 0.8) {
        return fmt("follower d=+1 fraction %.6f is not above 0.8", follower_cell.fraction());
    }
    for (const auto& row : table.rows) {
        if (row.store_id == table.focal_store ||
            row.store_id == scenarios::kInjectionFollower) {
            continue;
        }
        for (int d = 0; d <= table.k; ++d) {
            const double f = table.cell(row.store_id, d).fraction();
            if (f >= 0.25) {
                return fmt("non-follower %s d=%+d fraction %.6f reaches 0.25",
                           row.store_id.c_str(), d, f);
            }
        }
    }
    if (hits.size() != 1 || hits[0].store_id != scenarios::kInjectionFollower) {
        return fmt("screen flagged %zu stores (first: %s)", hits.size(),
                   hits.empty() ? "-" : hits[0].store_id.c_str());
    }

    // Exact regression against the frozen baseline.
    if (follower_cell.numerator != kInjectionBaseline.follower_numerator ||
        follower_cell.denominator != kInjectionBaseline.follower_denominator) {
        return fmt("follower cell %lld/%lld differs from recorded %lld/%lld",
                   (long long)follower_cell.numerator, (long long)follower_cell.denominator,
                   (long long)kInjectionBaseline.follower_numerator,
                   (long long)kInjectionBaseline.follower_denominator);
    }
    if (screen_line != kInjectionBaseline.screen_line) {
        return fmt("screen line '%s' differs from recorded '%s'", screen_line.c_str(),
                   kInjectionBaseline.screen_line);
    }
    if (peak_block != kInjectionBaseline.peak_block) {
        return std::string("peak block differs from recorded baseline:\n") + peak_block;
    }
    return std::nullopt;
}

// ---- criterion 7: confound separation ---------------------------------------

std::optional<std::string> criterion_confound_separation() {
    auto config = scenarios::confound_config();
    const auto result = synth::confound_scenario(config, scenarios::kConfoundSeed);
    const ChangeLog log = extract_changes(result.panel);
    const auto strata = stratify(log, result.truth.categories);

    // Random stratum: the screen at the gate threshold must stay silent.
    const CarriedMap carried = default_carried(result.panel);
    const LagTable random_table =
        lag_distribution(strata.at(CategoryLabel::random), scenarios::kConfoundFocal,
                         scenarios::kConfoundRadius, carried);
    const auto hits = follow_screen(random_table, scenarios::kConfoundThreshold);
    if (!hits.empty()) {
        return fmt("random stratum flagged %zu stores (first: %s at %.3f)", hits.size(),
                   hits[0].store_id.c_str(), hits[0].peak_fraction);
    }

    // Bestseller strata: every list transition yields a multi-store response.
    const std::set<StoreId> responders{"resp-01", "resp-02", "resp-03",
                                       "resp-04", "resp-05", "resp-06"};
    std::set<std::tuple<StoreId, ItemId, Date>> changed;
    for (const auto& item : log.items()) {
        for (const auto& c : log.for_item(item)) changed.insert({c.store_id, item, c.date});
    }

    int transitions = 0;
    for (const auto& record : result.truth.categories.records()) {
        std::vector<char> status(static_cast<std::size_t>(config.horizon_days), 0);
        for (const auto& interval : record.intervals) {
            const int from = std::max(0, interval.start - config.start_date);
            const int to = std::min(config.horizon_days - 1, interval.end - config.start_date);
            for (int d = from; d <= to; ++d) status[static_cast<std::size_t>(d)] = 1;
        }
        for (int t = 1; t < config.horizon_days; ++t) {
            if (status[static_cast<std::size_t>(t)] == status[static_cast<std::size_t>(t - 1)]) {
                continue;
            }
            ++transitions;
            // The responders' lag support is {0,1,2}; count distinct stores
            // responding inside that window.
            std::set<StoreId> moved;
            for (const auto& store : responders) {
                for (int lag = 0; lag <= 2; ++lag) {
                    if (changed.count({store, record.item_id,
                                       config.start_date + (t + lag)}) > 0) {
                        moved.insert(store);
                        break;
                    }
                }
            }
            if (moved.size() < 2) {
                return fmt("transition on %s day %d drew only %zu responding stores",
                           record.item_id.c_str(), t, moved.size());
            }
        }
    }
    if (transitions == 0) return std::string("no list transitions generated");

    if (baseline_mode()) {
        std::printf("--- confound baseline ---\n");
        std::printf("transitions: %d\nchanges: %lld\n", transitions, (long long)log.size());
    }
    if (transitions != kConfoundBaseline.transitions) {
        return fmt("transition count %d differs from recorded %d", transitions,
                   kConfoundBaseline.transitions);
    }
    if (static_cast<std::int64_t>(log.size()) != kConfoundBaseline.changes) {
        return fmt("change count %lld differs from recorded %lld", (long long)log.size(),
                   (long long)kConfoundBaseline.changes);
    }
    return std::nullopt;
}

// ---- criterion 8: CLI determinism -------------------------------------------

int run_command(const std::string& command) {
    const int status = std::system((command + " > /dev/null 2>&1").c_str());
    if (status == -1 || !WIFEXITED(status)) return -1;
    return WEXITSTATUS(status);
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

std::optional<std::string> criterion_cli_determinism() {
    testutil::TempDir tmp;
    const std::string bin = LOCKSTEP_CLI_BIN;
    testutil::write_file(tmp.path() / "sim.json",
                         synth::sim_config_to_json(scenarios::injection_config()));

    for (const char* tag : {"a", "b"}) {
        const auto sim_dir = tmp.path() / (std::string("sim-") + tag);
        const auto rep_dir = tmp.path() / (std::string("rep-") + tag);
        int rc = run_command(bin + " simulate --sim-config " + (tmp.path() / "sim.json").string() +
                             " --seed " + std::to_string(scenarios::kInjectionSeed) + " --out " +
                             sim_dir.string());
        if (rc != 0) return fmt("simulate run %s exited with %d", tag, rc);
        rc = run_command(bin + " analyze --observations " +
                         (sim_dir / "observations.csv").string() + " --categories " +
                         (sim_dir / "categories.csv").string() + " --focal " +
                         scenarios::kInjectionFocal + " --out " + rep_dir.string());
        if (rc != 0) return fmt("analyze run %s exited with %d", tag, rc);
    }

    const auto sim_a = read_tree(tmp.path() / "sim-a");
    const auto sim_b = read_tree(tmp.path() / "sim-b");
    if (sim_a != sim_b) return std::string("simulate trees differ between runs");
    if (sim_a.size() != 3) return fmt("simulate tree holds %zu files, expected 3", sim_a.size());

    const auto rep_a = read_tree(tmp.path() / "rep-a");
    const auto rep_b = read_tree(tmp.path() / "rep-b");
    if (rep_a != rep_b) return std::string("analyze trees differ between runs");
    if (rep_a.count("bundle.json") == 0) return std::string("analyze tree lacks bundle.json");
    return std::nullopt;
}

// ---- criterion 9: report golden files ---------------------------------------

std::optional<std::string> criterion_golden_files() {
    const std::filesystem::path root =
        std::filesystem::path(LOCKSTEP_SOURCE_DIR) / "tests" / "golden";
    const auto bundle = fixtures::golden_bundle();

    for (const auto& [format, dir] :
         std::vector<std::pair<ReportFormat, std::string>>{{ReportFormat::csv, "csv"},
                                                           {ReportFormat::markdown, "md"}}) {
        const auto golden_dir = root / dir;
        if (!std::filesystem::is_directory(golden_dir)) {
            return fmt("golden directory %s missing", golden_dir.string().c_str());
        }
        const auto files = render(bundle, format);

        std::set<std::string> on_disk;
        for (const auto& entry : std::filesystem::directory_iterator(golden_dir)) {
            on_disk.insert(entry.path().filename().string());
        }
        std::set<std::string> rendered;
        for (const auto& file : files) rendered.insert(file.name);
        if (rendered != on_disk) {
            return fmt("%s: rendered %zu files but %zu goldens on disk", dir.c_str(),
                       rendered.size(), on_disk.size());
        }
        for (const auto& file : files) {
            if (testutil::read_file(golden_dir / file.name) != file.bytes) {
                return fmt("%s/%s differs from the golden copy", dir.c_str(), file.name.c_str());
            }
        }
    }
    return std::nullopt;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "segmentation oracle equivalence (1000 sequences, n in {1,2,3,7})", 5.0,
         criterion_segmentation_oracle},
        {2, "cluster conservation and window monotonicity (200 panels)", 10.0,
         criterion_conservation},
        {3, "direction split: up + down = total in every histogram bucket", 10.0,
         criterion_direction_split},
        {4, "leader-ratio arithmetic on published counts", 1.0, criterion_ratio_arithmetic},
        {5, "lag-table oracle equivalence (100 panels)", 30.0, criterion_lag_oracle},
        {6, "injection/recovery: planted follower found, baselines exact", 60.0,
         criterion_injection_recovery},
        {7, "confound separation: quiet random stratum, clustered list shocks", 60.0,
         criterion_confound_separation},
        {8, "CLI determinism: simulate + analyze twice, byte-identical trees", 120.0,
         criterion_cli_determinism},
        {9, "report golden files, CSV and Markdown", 5.0, criterion_golden_files},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::optional<std::string> failure;
        try {
            failure = criterion.body();
        } catch (const std::exception& e) {
            failure = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!failure && elapsed > criterion.budget_seconds) {
            failure = fmt("took %.1fs, budget %.0fs", elapsed, criterion.budget_seconds);
        }
        if (failure) {
            ++failures;
            std::printf("FAIL: criterion %d — %s: %s\n", criterion.number, criterion.title,
                        failure->c_str());
        } else {
            std::printf("PASS: criterion %d — %s (%.2fs)\n", criterion.number, criterion.title,
                        elapsed);
        }
    }
    if (failures > 0) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures;
}
