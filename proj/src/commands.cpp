#include "lockstep/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "lockstep/clusters.hpp"
#include "lockstep/error.hpp"
#include "lockstep/leadership.hpp"
#include "lockstep/obslog.hpp"
#include "lockstep/synth.hpp"
#include "lockstep/version.hpp"

namespace fs = std::filesystem;

namespace lockstep {

using nlohmann::json;

namespace {

std::string read_file_or_die(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file_or_die(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << bytes;
    out.flush();
    if (!out) throw Error("short write to " + path.string());
}

void ensure_out_dir(const fs::path& dir) {
    if (dir.empty()) throw Error("no output directory configured (--out)");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::string fmt_fraction(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", value);
    return buf;
}

}  // namespace

RunConfig run_config_from_json(const std::string& text, RunConfig base) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("run config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error("run config: top level must be an object");

    auto get_path = [&doc](const char* key, fs::path& target) {
        if (!doc.contains(key)) return;
        if (!doc[key].is_string()) throw Error(std::string("run config: ") + key + ": expected a string");
        target = doc[key].get<std::string>();
    };
    get_path("log_dir", base.log_dir);
    get_path("observations", base.observations_path);
    get_path("categories", base.categories_path);
    get_path("out_dir", base.out_dir);
    get_path("sim_config", base.sim_config_path);
    get_path("bundle", base.bundle_path);

    if (doc.contains("windows")) {
        if (!doc["windows"].is_array()) throw Error("run config: windows: expected an array");
        base.windows.clear();
        for (const auto& w : doc["windows"]) {
            if (!w.is_number_integer()) throw Error("run config: windows: expected integers");
            base.windows.push_back(w.get<int>());
        }
    }
    if (doc.contains("focal_store")) {
        if (!doc["focal_store"].is_string()) throw Error("run config: focal_store: expected a string");
        base.focal_store = doc["focal_store"].get<std::string>();
    }
    if (doc.contains("lag_radius")) {
        if (!doc["lag_radius"].is_number_integer()) {
            throw Error("run config: lag_radius: expected an integer");
        }
        base.lag_radius = doc["lag_radius"].get<int>();
    }
    if (doc.contains("screen_threshold")) {
        if (!doc["screen_threshold"].is_number()) {
            throw Error("run config: screen_threshold: expected a number");
        }
        base.screen_threshold = doc["screen_threshold"].get<double>();
    }
    if (doc.contains("format")) {
        if (!doc["format"].is_string()) throw Error("run config: format: expected a string");
        auto format = parse_report_format(doc["format"].get<std::string>());
        if (!format) throw Error("run config: format: expected csv or markdown");
        base.format = *format;
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer()) {
            throw Error("run config: seed: expected an integer");
        }
        const auto value = doc["seed"].get<std::int64_t>();
        if (value < 0) throw Error("run config: seed: must be non-negative");
        base.seed = static_cast<std::uint64_t>(value);
    }
    if (doc.contains("source_name")) {
        if (!doc["source_name"].is_string()) {
            throw Error("run config: source_name: expected a string");
        }
        base.source_name = doc["source_name"].get<std::string>();
    }
    if (doc.contains("sources")) {
        if (!doc["sources"].is_array()) throw Error("run config: sources: expected an array");
        base.sources.clear();
        for (std::size_t i = 0; i < doc["sources"].size(); ++i) {
            const json& entry = doc["sources"][i];
            const std::string path = "run config: sources[" + std::to_string(i) + "]";
            auto need_str = [&entry, &path](const char* key) {
                if (!entry.contains(key) || !entry[key].is_string()) {
                    throw Error(path + "." + key + ": expected a string");
                }
                return entry[key].get<std::string>();
            };
            SourceDef source;
            source.name = need_str("name");
            source.endpoint = need_str("endpoint");
            source.parser = need_str("parser");
            source.schedule = entry.value("schedule", "");
            base.sources.push_back(std::move(source));
        }
    }
    return base;
}

int cmd_ingest(const RunConfig& config) {
    if (config.log_dir.empty()) throw Error("ingest requires a log directory (--log)");
    if (config.observations_path.empty()) {
        throw Error("ingest requires an observation CSV (--observations)");
    }
    ObservationLog log = ObservationLog::open(config.log_dir);
    const std::string bytes = read_file_or_die(config.observations_path);
    const std::string source = config.source_name.empty()
                                   ? "ingest:" + config.observations_path.filename().string()
                                   : config.source_name;
    SegmentEntry entry;
    try {
        entry = log.append(bytes, source);
    } catch (const Error& e) {
        throw Error(config.observations_path.string() + ": " + e.what());
    }

    const PricePanel panel = log.replay();
    std::cout << "appended " << entry.segment << " (" << entry.observations << " observations)\n";
    std::cout << "panel: stores=" << panel.stores().size() << " items=" << panel.items().size()
              << " days=" << panel.distinct_dates() << " observations=" << panel.size() << "\n";
    return kExitOk;
}

int cmd_collect(const RunConfig& config) {
    if (config.log_dir.empty()) throw Error("collect requires a log directory (--log)");
    ObservationLog log = ObservationLog::open(config.log_dir);
    const ParserRegistry registry = ParserRegistry::with_builtins();
    const CollectResult result = collect_once(log, config.sources, registry);
    for (const auto& outcome : result.outcomes) {
        if (outcome.ok) {
            std::cout << "source " << outcome.source << ": appended " << outcome.segment << " ("
                      << outcome.observations << " observations)\n";
        } else {
            std::cerr << "source " << outcome.source << ": FAILED: " << outcome.error << "\n";
        }
    }
    return result.any_failed() ? kExitPartial : kExitOk;
}

int cmd_simulate(const RunConfig& config) {
    if (config.sim_config_path.empty()) {
        throw Error("simulate requires a simulation config (--sim-config)");
    }
    if (!config.seed) {
        throw Error("simulate requires an explicit --seed; refusing to pick one silently");
    }
    ensure_out_dir(config.out_dir);

    synth::SimConfig sim = synth::sim_config_from_json(read_file_or_die(config.sim_config_path));
    const synth::SimResult result = synth::simulate(std::move(sim), *config.seed);

    write_file_or_die(config.out_dir / "observations.csv", result.panel.to_csv());
    write_file_or_die(config.out_dir / "categories.csv",
                      categories_to_csv(result.truth.categories));
    write_file_or_die(config.out_dir / "ground_truth.jsonl",
                      synth::ground_truth_to_jsonl(result.truth));

    std::cout << "simulated panel: stores=" << result.panel.stores().size()
              << " items=" << result.panel.items().size()
              << " days=" << result.panel.distinct_dates()
              << " observations=" << result.panel.size() << "\n";
    std::cout << "wrote observations.csv, categories.csv, ground_truth.jsonl to "
              << config.out_dir.string() << "\n";
    return kExitOk;
}

namespace {

PricePanel load_panel(const RunConfig& config) {
    if (!config.log_dir.empty()) {
        return ObservationLog::open(config.log_dir).replay();
    }
    if (!config.observations_path.empty()) {
        const std::string bytes = read_file_or_die(config.observations_path);
        try {
            return PricePanel::from_observations(parse_observation_csv(bytes));
        } catch (const Error& e) {
            throw Error(config.observations_path.string() + ": " + e.what());
        }
    }
    throw Error("analyze requires an input: --log or --observations");
}

// Without a category file every item defaults to the random stratum; with
// one, stratify() insists on full coverage so typos cannot leak items.
CategorySet load_categories(const RunConfig& config, const PricePanel& panel) {
    if (config.categories_path.empty()) {
        std::vector<Category> records;
        records.reserve(panel.items().size());
        for (const auto& item : panel.items()) {
            records.push_back({item, CategoryLabel::random, {}});
        }
        return CategorySet::from_records(std::move(records));
    }
    try {
        return load_categories_file(config.categories_path);
    } catch (const Error& e) {
        throw Error(config.categories_path.string() + ": " + e.what());
    }
}

// Initiator rows over every panel store, so Table 4 keeps its shape even for
// stores that never initiate.
std::vector<InitiatorStats> initiator_rows(const std::vector<Cluster>& clusters, Window window,
                                           const std::vector<StoreId>& universe) {
    std::vector<InitiatorStats> rows = classify_initiators(clusters);
    std::set<StoreId> seen;
    for (const auto& row : rows) seen.insert(row.store_id);
    for (const auto& store : universe) {
        if (seen.count(store) > 0) continue;
        InitiatorStats zero;
        zero.store_id = store;
        zero.window = window;
        rows.push_back(std::move(zero));
    }
    std::sort(rows.begin(), rows.end(),
              [](const InitiatorStats& a, const InitiatorStats& b) {
                  return a.store_id < b.store_id;
              });
    return rows;
}

std::string screen_to_csv(const std::vector<ScreenHit>& hits) {
    std::string out = "store_id,peak_day,peak_fraction\n";
    for (const auto& hit : hits) {
        out += hit.store_id + "," + std::to_string(hit.peak_day) + "," +
               fmt_fraction(hit.peak_fraction) + "\n";
    }
    return out;
}

}  // namespace

int cmd_analyze(const RunConfig& config) {
    if (config.lag_radius < 1) throw Error("lag radius must be at least 1");
    if (config.windows.empty()) throw Error("at least one cluster window is required");
    for (int days : config.windows) {
        if (days < 1) throw Error("cluster windows must be at least 1 day");
    }
    ensure_out_dir(config.out_dir);

    const PricePanel panel = load_panel(config);
    const CategorySet categories = load_categories(config, panel);

    if (!config.focal_store.empty() && !panel.empty()) {
        const auto& stores = panel.stores();
        if (std::find(stores.begin(), stores.end(), config.focal_store) == stores.end()) {
            throw Error("unknown focal store: " + config.focal_store);
        }
    }

    const ChangeLog changelog = extract_changes(panel);
    const std::map<CategoryLabel, ChangeLog> strata = stratify(changelog, categories);

    ReportBundle bundle;
    bundle.meta.panel_digest = panel.digest();
    bundle.meta.date_range = panel.date_range();
    bundle.meta.toolkit_version = kToolkitVersion;
    bundle.meta.change_count = static_cast<std::int64_t>(changelog.size());

    bundle.table1 = per_store_change_counts(strata, panel.stores());

    for (int days : config.windows) {
        const Window window{days};
        const std::vector<Cluster> all_clusters = segment_all_items(changelog, window);
        bundle.table2.push_back({window, cluster_summary(all_clusters)});
        for (CategoryLabel label : kAllCategories) {
            const std::vector<Cluster> clusters = segment_all_items(strata.at(label), window);
            bundle.table3.push_back({window, label, store_count_histogram(clusters)});
        }
        bundle.table4.push_back({window, initiator_rows(all_clusters, window, panel.stores())});
    }

    std::vector<std::pair<CategoryLabel, std::vector<ScreenHit>>> screens;
    if (config.focal_store.empty()) {
        bundle.absent.push_back({"table5", "no focal store configured"});
    } else {
        const CarriedMap carried = default_carried(panel);
        for (CategoryLabel label : kAllCategories) {
            const std::string name = "table5_" + std::string(to_string(label)) + "_all";
            try {
                LagTable table = lag_distribution(strata.at(label), config.focal_store,
                                                  config.lag_radius, carried);
                table.category = label;
                screens.emplace_back(label, follow_screen(table, config.screen_threshold));
                bundle.table5.push_back({label, std::move(table)});
            } catch (const Error& e) {
                bundle.absent.push_back({name, e.what()});
            }
        }
    }

    const std::vector<RenderedFile> files = render(bundle, config.format);
    for (const auto& file : files) write_file_or_die(config.out_dir / file.name, file.bytes);
    write_file_or_die(config.out_dir / "bundle.json", bundle_to_json(bundle));
    for (const auto& [label, hits] : screens) {
        write_file_or_die(config.out_dir /
                              ("screen_" + std::string(to_string(label)) + ".csv"),
                          screen_to_csv(hits));
    }

    std::cout << "panel: stores=" << panel.stores().size() << " items=" << panel.items().size()
              << " days=" << panel.distinct_dates() << " observations=" << panel.size() << "\n";
    std::cout << "changes: " << changelog.size() << "\n";
    std::cout << "wrote " << (files.size() + 1 + screens.size()) << " files to "
              << config.out_dir.string() << "\n";
    return kExitOk;
}

int cmd_report(const RunConfig& config) {
    if (config.bundle_path.empty()) throw Error("report requires a bundle file (--bundle)");
    ensure_out_dir(config.out_dir);
    const ReportBundle bundle = bundle_from_json(read_file_or_die(config.bundle_path));
    const std::vector<RenderedFile> files = render(bundle, config.format);
    for (const auto& file : files) write_file_or_die(config.out_dir / file.name, file.bytes);
    std::cout << "wrote " << files.size() << " files to " << config.out_dir.string() << "\n";
    return kExitOk;
}

}  // namespace lockstep
