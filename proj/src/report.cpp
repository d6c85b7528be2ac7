#include "lockstep/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "lockstep/error.hpp"

namespace lockstep {

using nlohmann::json;
using nlohmann::ordered_json;

std::optional<ReportFormat> parse_report_format(std::string_view text) {
    if (text == "csv") return ReportFormat::csv;
    if (text == "markdown" || text == "md") return ReportFormat::markdown;
    return std::nullopt;
}

namespace {

using Row = std::vector<std::string>;

struct TableDoc {
    std::string base_name;  // without extension
    std::string title;
    std::vector<std::string> header;
    std::vector<Row> rows;
};

std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string md_escape(const std::string& field) {
    std::string out;
    for (char c : field) {
        if (c == '|') out += "\\|";
        else out.push_back(c);
    }
    return out;
}

std::string to_csv(const TableDoc& doc) {
    std::string out;
    auto emit_row = [&out](const Row& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out.push_back(',');
            out += csv_quote(row[i]);
        }
        out.push_back('\n');
    };
    emit_row(doc.header);
    for (const auto& row : doc.rows) emit_row(row);
    return out;
}

std::string to_markdown_body(const TableDoc& doc) {
    std::string out;
    auto emit_row = [&out](const Row& row) {
        out += "|";
        for (const auto& cell : row) {
            out.push_back(' ');
            out += md_escape(cell);
            out += " |";
        }
        out.push_back('\n');
    };
    emit_row(doc.header);
    Row rule(doc.header.size(), "---");
    emit_row(rule);
    for (const auto& row : doc.rows) emit_row(row);
    return out;
}

std::string to_markdown(const TableDoc& doc) {
    return "## " + doc.title + "\n\n" + to_markdown_body(doc);
}

std::string fmt_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

std::string fmt_ratio(const std::optional<double>& value) {
    return value ? fmt_fixed(*value, 3) : "n/a";
}

std::string fmt_avg(const std::optional<double>& value) {
    return value ? fmt_fixed(*value, 1) : "n/a";
}

std::string fmt_pct(double fraction) { return std::to_string(std::lround(fraction * 100.0)); }

std::string category_token(CategoryLabel label) { return std::string(to_string(label)); }

[[noreturn]] void verification_error(const std::string& table, const std::string& detail) {
    throw Error("report verification: " + table + ": " + detail);
}

// ---- section verification ----------------------------------------------

void verify_table1(const ChangeCountTable& table) {
    ChangeCountRow sums;
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.by_category.size(); ++c) {
            if (row.by_category[c] < 0) {
                verification_error("table1_all_all", "negative count for " + row.store_id);
            }
            sums.by_category[c] += row.by_category[c];
        }
    }
    for (std::size_t c = 0; c < sums.by_category.size(); ++c) {
        if (sums.by_category[c] != table.totals.by_category[c]) {
            verification_error(
                "table1_all_all",
                "totals row does not equal column sums in column " +
                    category_token(static_cast<CategoryLabel>(c)) + " (stored " +
                    std::to_string(table.totals.by_category[c]) + ", recomputed " +
                    std::to_string(sums.by_category[c]) + ")");
        }
    }
}

void verify_table2(const ReportBundle& bundle) {
    for (const auto& entry : bundle.table2) {
        const std::string name = "table2_all_all";
        const auto& s = entry.stats;
        if (s.total_clusters < 0) verification_error(name, "negative cluster count");
        if (s.total_clusters == 0) {
            if (s.avg_length_days || s.avg_changes_per_cluster) {
                verification_error(name, "averages present with zero clusters");
            }
            continue;
        }
        if (!s.avg_length_days || !s.avg_changes_per_cluster) {
            verification_error(name, "averages missing with nonzero clusters");
        }
        // Clusters partition the changelog, so the implied change total must
        // round-trip to the metadata count.
        const double implied = *s.avg_changes_per_cluster * static_cast<double>(s.total_clusters);
        const double expected = static_cast<double>(bundle.meta.change_count);
        if (std::abs(implied - expected) > 1e-6 * std::max(1.0, expected)) {
            verification_error(name, "window " + std::to_string(entry.window.days) +
                                         " implies " + fmt_fixed(implied, 3) +
                                         " changes but metadata records " +
                                         std::to_string(bundle.meta.change_count));
        }
    }
}

void verify_table3(const Table3Entry& entry) {
    const std::string name =
        "table3_" + category_token(entry.category) + "_" + std::to_string(entry.window.days);
    for (std::size_t b = 0; b < entry.histogram.buckets.size(); ++b) {
        const auto& bucket = entry.histogram.buckets[b];
        if (bucket.changes_up + bucket.changes_down != bucket.total_changes) {
            verification_error(name, "bucket " +
                                         std::string(StoreCountHistogram::bucket_name(
                                             static_cast<int>(b))) +
                                         ": up + down != total");
        }
        if (bucket.total_changes < 0 || bucket.changes_up < 0 || bucket.changes_down < 0) {
            verification_error(name, "negative tally");
        }
    }
}

void verify_table4(const Table4Entry& entry) {
    const std::string name = "table4_all_" + std::to_string(entry.window.days);
    for (const auto& row : entry.rows) {
        if (row.single_count < 0 || row.first_of_multiple_count < 0) {
            verification_error(name, "negative count for " + row.store_id);
        }
    }
}

void verify_table5(const Table5Entry& entry) {
    const std::string name = "table5_" + category_token(entry.category) + "_all";
    const auto& table = entry.table;
    if (table.k < 1) verification_error(name, "lag radius must be at least 1");
    const std::size_t width = static_cast<std::size_t>(2 * table.k + 1);
    for (const auto& row : table.rows) {
        if (row.cells.size() != width) {
            verification_error(name, "row " + row.store_id + " has wrong cell count");
        }
        for (const auto& cell : row.cells) {
            if (cell.numerator < 0 || cell.denominator < 0 ||
                cell.numerator > cell.denominator) {
                verification_error(name, "row " + row.store_id +
                                             ": numerator/denominator out of range");
            }
        }
    }
}

void verify_complete(const ReportBundle& bundle) {
    auto covered = [&bundle](const char* prefix) {
        return std::any_of(bundle.absent.begin(), bundle.absent.end(),
                           [prefix](const AbsentSection& a) {
                               return a.name.rfind(prefix, 0) == 0;
                           });
    };
    if (!bundle.table1 && !covered("table1")) {
        throw Error("report verification: table1 neither populated nor marked absent");
    }
    if (bundle.table2.empty() && !covered("table2")) {
        throw Error("report verification: table2 neither populated nor marked absent");
    }
    if (bundle.table3.empty() && !covered("table3")) {
        throw Error("report verification: table3 neither populated nor marked absent");
    }
    if (bundle.table4.empty() && !covered("table4")) {
        throw Error("report verification: table4 neither populated nor marked absent");
    }
    if (bundle.table5.empty() && !covered("table5")) {
        throw Error("report verification: table5 neither populated nor marked absent");
    }
}

// ---- section documents ---------------------------------------------------

TableDoc build_table1(const ChangeCountTable& table) {
    TableDoc doc;
    doc.base_name = "table1_all_all";
    doc.title = "Table 1: total price changes by store";
    doc.header = {"store_id", "random", "nyt_bestseller", "computer_bestseller", "total"};
    auto push = [&doc](const ChangeCountRow& row) {
        doc.rows.push_back({row.store_id, std::to_string(row.by_category[0]),
                            std::to_string(row.by_category[1]),
                            std::to_string(row.by_category[2]), std::to_string(row.total())});
    };
    for (const auto& row : table.rows) push(row);
    push(table.totals);
    return doc;
}

TableDoc build_table2(const std::vector<Table2Entry>& entries) {
    TableDoc doc;
    doc.base_name = "table2_all_all";
    doc.title = "Table 2: price change clusters by window";
    doc.header = {"window_days", "total_clusters", "avg_length_days", "avg_changes_per_cluster"};
    for (const auto& entry : entries) {
        doc.rows.push_back({std::to_string(entry.window.days),
                            std::to_string(entry.stats.total_clusters),
                            fmt_avg(entry.stats.avg_length_days),
                            fmt_avg(entry.stats.avg_changes_per_cluster)});
    }
    return doc;
}

TableDoc build_table3(const Table3Entry& entry) {
    TableDoc doc;
    doc.base_name =
        "table3_" + category_token(entry.category) + "_" + std::to_string(entry.window.days);
    doc.title = "Table 3: cluster store counts (" + category_token(entry.category) + ", " +
                std::to_string(entry.window.days) + "-day window)";
    doc.header = {"stores_in_cluster", "total_changes", "changes_up", "changes_down"};
    DirectionTally sums;
    for (std::size_t b = 0; b < entry.histogram.buckets.size(); ++b) {
        const auto& bucket = entry.histogram.buckets[b];
        doc.rows.push_back({std::string(StoreCountHistogram::bucket_name(static_cast<int>(b))),
                            std::to_string(bucket.total_changes),
                            std::to_string(bucket.changes_up),
                            std::to_string(bucket.changes_down)});
        sums.total_changes += bucket.total_changes;
        sums.changes_up += bucket.changes_up;
        sums.changes_down += bucket.changes_down;
    }
    doc.rows.push_back({"TOTAL", std::to_string(sums.total_changes),
                        std::to_string(sums.changes_up), std::to_string(sums.changes_down)});
    return doc;
}

TableDoc build_table4(const Table4Entry& entry) {
    TableDoc doc;
    doc.base_name = "table4_all_" + std::to_string(entry.window.days);
    doc.title =
        "Table 4: price change initiators (" + std::to_string(entry.window.days) + "-day window)";
    doc.header = {"store_id", "single", "first_of_multiple", "ratio"};
    for (const auto& row : entry.rows) {
        doc.rows.push_back({row.store_id, std::to_string(row.single_count),
                            std::to_string(row.first_of_multiple_count),
                            fmt_ratio(leader_ratio(row).ratio)});
    }
    return doc;
}

std::vector<std::string> lag_header(const LagTable& table) {
    std::vector<std::string> header{"store_id"};
    for (int d = -table.k; d <= table.k; ++d) {
        std::string name = "d";
        if (d >= 0) name.push_back('+');
        name += std::to_string(d);
        header.push_back(std::move(name));
    }
    return header;
}

TableDoc build_table5(const Table5Entry& entry) {
    TableDoc doc;
    doc.base_name = "table5_" + category_token(entry.category) + "_all";
    doc.title = "Table 5: price changes relative to " + entry.table.focal_store + " (" +
                category_token(entry.category) + "), percent";
    doc.header = lag_header(entry.table);
    for (const auto& row : entry.table.rows) {
        Row cells{row.store_id};
        for (const auto& cell : row.cells) cells.push_back(fmt_pct(cell.fraction()));
        doc.rows.push_back(std::move(cells));
    }
    return doc;
}

TableDoc build_table5_counts(const Table5Entry& entry) {
    TableDoc doc;
    doc.base_name = "table5_counts_" + category_token(entry.category) + "_all";
    doc.title = "Table 5 counts: changed/carried relative to " + entry.table.focal_store + " (" +
                category_token(entry.category) + ")";
    doc.header = lag_header(entry.table);
    for (const auto& row : entry.table.rows) {
        Row cells{row.store_id};
        for (const auto& cell : row.cells) {
            cells.push_back(std::to_string(cell.numerator) + "/" +
                            std::to_string(cell.denominator));
        }
        doc.rows.push_back(std::move(cells));
    }
    return doc;
}

TableDoc build_metadata(const ReportBundle& bundle) {
    TableDoc doc;
    doc.base_name = "metadata";
    doc.title = "Report metadata";
    doc.header = {"key", "value"};
    doc.rows.push_back({"panel_digest", bundle.meta.panel_digest});
    doc.rows.push_back(
        {"date_min", bundle.meta.date_range ? bundle.meta.date_range->min.to_string() : "n/a"});
    doc.rows.push_back(
        {"date_max", bundle.meta.date_range ? bundle.meta.date_range->max.to_string() : "n/a"});
    doc.rows.push_back({"toolkit_version", bundle.meta.toolkit_version});
    doc.rows.push_back({"change_count", std::to_string(bundle.meta.change_count)});
    for (const auto& absent : bundle.absent) {
        doc.rows.push_back({"absent_section", absent.name + ": " + absent.reason});
    }
    return doc;
}

}  // namespace

std::vector<RenderedFile> render(const ReportBundle& bundle, ReportFormat format) {
    verify_complete(bundle);
    if (bundle.table1) verify_table1(*bundle.table1);
    verify_table2(bundle);
    for (const auto& entry : bundle.table3) verify_table3(entry);
    for (const auto& entry : bundle.table4) verify_table4(entry);
    for (const auto& entry : bundle.table5) verify_table5(entry);

    // Deterministic section order regardless of how the bundle was assembled.
    auto table3 = bundle.table3;
    std::sort(table3.begin(), table3.end(), [](const Table3Entry& a, const Table3Entry& b) {
        if (a.category != b.category) return static_cast<int>(a.category) < static_cast<int>(b.category);
        return a.window.days < b.window.days;
    });
    auto table4 = bundle.table4;
    std::sort(table4.begin(), table4.end(),
              [](const Table4Entry& a, const Table4Entry& b) { return a.window.days < b.window.days; });
    auto table5 = bundle.table5;
    std::sort(table5.begin(), table5.end(), [](const Table5Entry& a, const Table5Entry& b) {
        return static_cast<int>(a.category) < static_cast<int>(b.category);
    });
    auto table2 = bundle.table2;
    std::sort(table2.begin(), table2.end(),
              [](const Table2Entry& a, const Table2Entry& b) { return a.window.days < b.window.days; });

    std::vector<TableDoc> docs;
    if (bundle.table1) docs.push_back(build_table1(*bundle.table1));
    if (!table2.empty()) docs.push_back(build_table2(table2));
    for (const auto& entry : table3) docs.push_back(build_table3(entry));
    for (const auto& entry : table4) docs.push_back(build_table4(entry));
    for (const auto& entry : table5) {
        docs.push_back(build_table5(entry));
        docs.push_back(build_table5_counts(entry));
    }
    docs.push_back(build_metadata(bundle));

    std::vector<RenderedFile> files;
    if (format == ReportFormat::csv) {
        for (const auto& doc : docs) files.push_back({doc.base_name + ".csv", to_csv(doc)});
    } else {
        std::string combined = "# Price panel report\n";
        for (const auto& doc : docs) {
            files.push_back({doc.base_name + ".md", to_markdown(doc)});
            combined += "\n" + to_markdown(doc);
        }
        files.push_back({"report.md", std::move(combined)});
    }
    return files;
}

// ---- bundle serialization -------------------------------------------------

namespace {

ordered_json meta_to_json(const ReportMeta& meta) {
    ordered_json doc;
    doc["panel_digest"] = meta.panel_digest;
    if (meta.date_range) {
        doc["date_min"] = meta.date_range->min.to_string();
        doc["date_max"] = meta.date_range->max.to_string();
    }
    doc["toolkit_version"] = meta.toolkit_version;
    doc["change_count"] = meta.change_count;
    return doc;
}

ordered_json count_row_to_json(const ChangeCountRow& row) {
    ordered_json doc;
    doc["store_id"] = row.store_id;
    doc["random"] = row.by_category[0];
    doc["nyt_bestseller"] = row.by_category[1];
    doc["computer_bestseller"] = row.by_category[2];
    return doc;
}

const json& jneed(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) throw Error("bundle: " + path + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw Error("bundle: missing field " + path + "." + key);
    return *it;
}

std::string jneed_string(const json& obj, const char* key, const std::string& path) {
    const json& v = jneed(obj, key, path);
    if (!v.is_string()) throw Error("bundle: " + path + "." + key + ": expected a string");
    return v.get<std::string>();
}

std::int64_t jneed_int(const json& obj, const char* key, const std::string& path) {
    const json& v = jneed(obj, key, path);
    if (!v.is_number_integer()) throw Error("bundle: " + path + "." + key + ": expected an integer");
    return v.get<std::int64_t>();
}

std::optional<double> jget_optional_number(const json& obj, const char* key,
                                           const std::string& path) {
    if (!obj.is_object() || !obj.contains(key) || obj[key].is_null()) return std::nullopt;
    if (!obj[key].is_number()) throw Error("bundle: " + path + "." + key + ": expected a number");
    return obj[key].get<double>();
}

ChangeCountRow count_row_from_json(const json& doc, const std::string& path) {
    ChangeCountRow row;
    row.store_id = jneed_string(doc, "store_id", path);
    row.by_category[0] = jneed_int(doc, "random", path);
    row.by_category[1] = jneed_int(doc, "nyt_bestseller", path);
    row.by_category[2] = jneed_int(doc, "computer_bestseller", path);
    return row;
}

CategoryLabel jneed_category(const json& obj, const char* key, const std::string& path) {
    auto label = parse_category_label(jneed_string(obj, key, path));
    if (!label) throw Error("bundle: " + path + "." + key + ": unknown category");
    return *label;
}

}  // namespace

std::string bundle_to_json(const ReportBundle& bundle) {
    ordered_json doc;
    doc["meta"] = meta_to_json(bundle.meta);
    if (bundle.table1) {
        ordered_json t1;
        t1["rows"] = ordered_json::array();
        for (const auto& row : bundle.table1->rows) t1["rows"].push_back(count_row_to_json(row));
        t1["totals"] = count_row_to_json(bundle.table1->totals);
        doc["table1"] = std::move(t1);
    }
    doc["table2"] = ordered_json::array();
    for (const auto& entry : bundle.table2) {
        ordered_json e;
        e["window_days"] = entry.window.days;
        e["total_clusters"] = entry.stats.total_clusters;
        e["avg_length_days"] =
            entry.stats.avg_length_days ? ordered_json(*entry.stats.avg_length_days) : nullptr;
        e["avg_changes_per_cluster"] = entry.stats.avg_changes_per_cluster
                                           ? ordered_json(*entry.stats.avg_changes_per_cluster)
                                           : nullptr;
        doc["table2"].push_back(std::move(e));
    }
    doc["table3"] = ordered_json::array();
    for (const auto& entry : bundle.table3) {
        ordered_json e;
        e["window_days"] = entry.window.days;
        e["category"] = category_token(entry.category);
        e["buckets"] = ordered_json::array();
        for (std::size_t b = 0; b < entry.histogram.buckets.size(); ++b) {
            const auto& bucket = entry.histogram.buckets[b];
            ordered_json cell;
            cell["stores"] = std::string(StoreCountHistogram::bucket_name(static_cast<int>(b)));
            cell["total"] = bucket.total_changes;
            cell["up"] = bucket.changes_up;
            cell["down"] = bucket.changes_down;
            e["buckets"].push_back(std::move(cell));
        }
        doc["table3"].push_back(std::move(e));
    }
    doc["table4"] = ordered_json::array();
    for (const auto& entry : bundle.table4) {
        ordered_json e;
        e["window_days"] = entry.window.days;
        e["rows"] = ordered_json::array();
        for (const auto& row : entry.rows) {
            ordered_json r;
            r["store_id"] = row.store_id;
            r["single"] = row.single_count;
            r["first_of_multiple"] = row.first_of_multiple_count;
            e["rows"].push_back(std::move(r));
        }
        doc["table4"].push_back(std::move(e));
    }
    doc["table5"] = ordered_json::array();
    for (const auto& entry : bundle.table5) {
        ordered_json e;
        e["category"] = category_token(entry.category);
        e["focal_store"] = entry.table.focal_store;
        e["k"] = entry.table.k;
        e["rows"] = ordered_json::array();
        for (const auto& row : entry.table.rows) {
            ordered_json r;
            r["store_id"] = row.store_id;
            r["cells"] = ordered_json::array();
            for (const auto& cell : row.cells) {
                r["cells"].push_back({{"num", cell.numerator}, {"den", cell.denominator}});
            }
            e["rows"].push_back(std::move(r));
        }
        doc["table5"].push_back(std::move(e));
    }
    doc["absent"] = ordered_json::array();
    for (const auto& absent : bundle.absent) {
        doc["absent"].push_back({{"name", absent.name}, {"reason", absent.reason}});
    }
    return doc.dump(2) + "\n";
}

ReportBundle bundle_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("bundle: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error("bundle: top level must be an object");

    ReportBundle bundle;
    const json& meta = jneed(doc, "meta", "$");
    bundle.meta.panel_digest = jneed_string(meta, "panel_digest", "$.meta");
    bundle.meta.toolkit_version = jneed_string(meta, "toolkit_version", "$.meta");
    bundle.meta.change_count = jneed_int(meta, "change_count", "$.meta");
    if (meta.contains("date_min") != meta.contains("date_max")) {
        throw Error("bundle: $.meta: date_min and date_max must appear together");
    }
    if (meta.contains("date_min")) {
        DateRange range;
        range.min = Date::parse(jneed_string(meta, "date_min", "$.meta"));
        range.max = Date::parse(jneed_string(meta, "date_max", "$.meta"));
        bundle.meta.date_range = range;
    }

    if (doc.contains("table1")) {
        const json& t1 = doc["table1"];
        ChangeCountTable table;
        const json& rows = jneed(t1, "rows", "$.table1");
        if (!rows.is_array()) throw Error("bundle: $.table1.rows: expected an array");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            table.rows.push_back(
                count_row_from_json(rows[i], "$.table1.rows[" + std::to_string(i) + "]"));
        }
        table.totals = count_row_from_json(jneed(t1, "totals", "$.table1"), "$.table1.totals");
        bundle.table1 = std::move(table);
    }

    if (doc.contains("table2")) {
        const json& t2 = doc["table2"];
        if (!t2.is_array()) throw Error("bundle: $.table2: expected an array");
        for (std::size_t i = 0; i < t2.size(); ++i) {
            const std::string path = "$.table2[" + std::to_string(i) + "]";
            Table2Entry entry;
            entry.window.days = static_cast<int>(jneed_int(t2[i], "window_days", path));
            entry.stats.total_clusters = jneed_int(t2[i], "total_clusters", path);
            entry.stats.avg_length_days = jget_optional_number(t2[i], "avg_length_days", path);
            entry.stats.avg_changes_per_cluster =
                jget_optional_number(t2[i], "avg_changes_per_cluster", path);
            bundle.table2.push_back(std::move(entry));
        }
    }

    if (doc.contains("table3")) {
        const json& t3 = doc["table3"];
        if (!t3.is_array()) throw Error("bundle: $.table3: expected an array");
        for (std::size_t i = 0; i < t3.size(); ++i) {
            const std::string path = "$.table3[" + std::to_string(i) + "]";
            Table3Entry entry;
            entry.window.days = static_cast<int>(jneed_int(t3[i], "window_days", path));
            entry.category = jneed_category(t3[i], "category", path);
            const json& buckets = jneed(t3[i], "buckets", path);
            if (!buckets.is_array() || buckets.size() != StoreCountHistogram::kBucketCount) {
                throw Error("bundle: " + path + ".buckets: expected " +
                            std::to_string(StoreCountHistogram::kBucketCount) + " entries");
            }
            for (std::size_t b = 0; b < buckets.size(); ++b) {
                const std::string bpath = path + ".buckets[" + std::to_string(b) + "]";
                auto& bucket = entry.histogram.buckets[b];
                bucket.total_changes = jneed_int(buckets[b], "total", bpath);
                bucket.changes_up = jneed_int(buckets[b], "up", bpath);
                bucket.changes_down = jneed_int(buckets[b], "down", bpath);
            }
            bundle.table3.push_back(std::move(entry));
        }
    }

    if (doc.contains("table4")) {
        const json& t4 = doc["table4"];
        if (!t4.is_array()) throw Error("bundle: $.table4: expected an array");
        for (std::size_t i = 0; i < t4.size(); ++i) {
            const std::string path = "$.table4[" + std::to_string(i) + "]";
            Table4Entry entry;
            entry.window.days = static_cast<int>(jneed_int(t4[i], "window_days", path));
            const json& rows = jneed(t4[i], "rows", path);
            if (!rows.is_array()) throw Error("bundle: " + path + ".rows: expected an array");
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const std::string rpath = path + ".rows[" + std::to_string(r) + "]";
                InitiatorStats row;
                row.store_id = jneed_string(rows[r], "store_id", rpath);
                row.window = entry.window;
                row.single_count = jneed_int(rows[r], "single", rpath);
                row.first_of_multiple_count = jneed_int(rows[r], "first_of_multiple", rpath);
                entry.rows.push_back(std::move(row));
            }
            bundle.table4.push_back(std::move(entry));
        }
    }

    if (doc.contains("table5")) {
        const json& t5 = doc["table5"];
        if (!t5.is_array()) throw Error("bundle: $.table5: expected an array");
        for (std::size_t i = 0; i < t5.size(); ++i) {
            const std::string path = "$.table5[" + std::to_string(i) + "]";
            Table5Entry entry;
            entry.category = jneed_category(t5[i], "category", path);
            entry.table.focal_store = jneed_string(t5[i], "focal_store", path);
            entry.table.k = static_cast<int>(jneed_int(t5[i], "k", path));
            entry.table.category = entry.category;
            const json& rows = jneed(t5[i], "rows", path);
            if (!rows.is_array()) throw Error("bundle: " + path + ".rows: expected an array");
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const std::string rpath = path + ".rows[" + std::to_string(r) + "]";
                LagRow row;
                row.store_id = jneed_string(rows[r], "store_id", rpath);
                const json& cells = jneed(rows[r], "cells", rpath);
                if (!cells.is_array()) throw Error("bundle: " + rpath + ".cells: expected an array");
                for (std::size_t c = 0; c < cells.size(); ++c) {
                    const std::string cpath = rpath + ".cells[" + std::to_string(c) + "]";
                    LagCell cell;
                    cell.numerator = jneed_int(cells[c], "num", cpath);
                    cell.denominator = jneed_int(cells[c], "den", cpath);
                    row.cells.push_back(cell);
                }
                entry.table.rows.push_back(std::move(row));
            }
            bundle.table5.push_back(std::move(entry));
        }
    }

    if (doc.contains("absent")) {
        const json& absent = doc["absent"];
        if (!absent.is_array()) throw Error("bundle: $.absent: expected an array");
        for (std::size_t i = 0; i < absent.size(); ++i) {
            const std::string path = "$.absent[" + std::to_string(i) + "]";
            AbsentSection section;
            section.name = jneed_string(absent[i], "name", path);
            section.reason = jneed_string(absent[i], "reason", path);
            bundle.absent.push_back(std::move(section));
        }
    }
    return bundle;
}

}  // namespace lockstep
