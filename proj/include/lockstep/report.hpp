#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lockstep/clusters.hpp"
#include "lockstep/leadership.hpp"
#include "lockstep/panel.hpp"

namespace lockstep {

struct ReportMeta {
    std::string panel_digest;
    std::optional<DateRange> date_range;
    std::string toolkit_version;
    std::int64_t change_count = 0;
};

struct Table2Entry {
    Window window;
    ClusterStats stats;
};

struct Table3Entry {
    Window window;
    CategoryLabel category = CategoryLabel::random;
    StoreCountHistogram histogram;
};

struct Table4Entry {
    Window window;
    std::vector<InitiatorStats> rows;  // sorted by store_id
};

struct Table5Entry {
    CategoryLabel category = CategoryLabel::random;
    LagTable table;
};

// A section that could not be computed, with the reason it is missing.
// Absent sections still appear in the rendered metadata so a report never
// silently drops a table.
struct AbsentSection {
    std::string name;  // e.g. "table5_nyt_bestseller_all"
    std::string reason;
};

struct ReportBundle {
    ReportMeta meta;
    std::optional<ChangeCountTable> table1;
    std::vector<Table2Entry> table2;
    std::vector<Table3Entry> table3;
    std::vector<Table4Entry> table4;
    std::vector<Table5Entry> table5;
    std::vector<AbsentSection> absent;
};

enum class ReportFormat { csv, markdown };

std::optional<ReportFormat> parse_report_format(std::string_view text);

struct RenderedFile {
    std::string name;  // e.g. "table1_all_all.csv"
    std::string bytes;
};

// Deterministic rendering of every section. File names follow
// table{1..5}_{category}_{window}.{ext} with "all" for dimensions a table
// does not use, plus metadata.{csv,md} and (markdown only) a combined
// report.md. Totals rows are recomputed and verified, never corrected;
// a mismatch throws naming the offending table. Every table must be either
// populated or covered by an absent marker.
std::vector<RenderedFile> render(const ReportBundle& bundle, ReportFormat format);

// Bundle serialization, used to persist analysis results so they can be
// re-rendered without recomputation.
std::string bundle_to_json(const ReportBundle& bundle);
ReportBundle bundle_from_json(const std::string& text);

}  // namespace lockstep
