#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lockstep/date.hpp"

namespace lockstep {

using StoreId = std::string;
using ItemId = std::string;

constexpr std::string_view kObservationCsvHeader = "date,store_id,item_id,price_cents";

struct PriceObservation {
    StoreId store_id;
    ItemId item_id;
    Date date;
    std::int64_t price_cents = 0;
};

struct DateRange {
    Date min;
    Date max;
};

// Validated sparse panel: at most one price per (store, item, date), prices
// non-negative, observations kept sorted by (store, item, date).
class PricePanel {
public:
    PricePanel() = default;

    // Sorts, drops exact duplicates, rejects conflicting duplicates.
    static PricePanel from_observations(std::vector<PriceObservation> observations);

    const std::vector<PriceObservation>& observations() const { return observations_; }
    const std::vector<StoreId>& stores() const { return stores_; }
    const std::vector<ItemId>& items() const { return items_; }
    std::optional<DateRange> date_range() const { return date_range_; }
    std::size_t distinct_dates() const { return distinct_dates_; }
    bool empty() const { return observations_.empty(); }
    std::size_t size() const { return observations_.size(); }

    // Canonical observation CSV (header + rows in panel order, LF endings).
    std::string to_csv() const;
    // FNV-1a 64 of to_csv(), lowercase hex.
    std::string digest() const;

private:
    std::vector<PriceObservation> observations_;
    std::vector<StoreId> stores_;
    std::vector<ItemId> items_;
    std::optional<DateRange> date_range_;
    std::size_t distinct_dates_ = 0;
};

// Parses the observation CSV format. Errors cite 1-based line numbers.
std::vector<PriceObservation> parse_observation_csv(std::string_view text);

PricePanel ingest_observations(std::string_view csv_text);
PricePanel ingest_observations_file(const std::filesystem::path& path);

enum class Direction { up, down };

constexpr std::string_view to_string(Direction d) { return d == Direction::up ? "up" : "down"; }

// One store's price movement on one item between consecutive observed dates.
struct PriceChange {
    StoreId store_id;
    ItemId item_id;
    Date date;       // day the new price was first observed
    Date prev_date;  // previous day with an observed price at the same store
    std::int64_t prev_price = 0;
    std::int64_t new_price = 0;

    Direction direction() const { return new_price > prev_price ? Direction::up : Direction::down; }
};

// Changes in canonical (item_id, date, store_id) order; per-item groups are
// contiguous.
class ChangeLog {
public:
    ChangeLog() = default;
    static ChangeLog from_changes(std::vector<PriceChange> changes);

    const std::vector<PriceChange>& changes() const { return changes_; }
    bool empty() const { return changes_.empty(); }
    std::size_t size() const { return changes_.size(); }

    std::vector<ItemId> items() const;
    std::vector<StoreId> stores() const;
    std::span<const PriceChange> for_item(const ItemId& item) const;

private:
    std::vector<PriceChange> changes_;
};

// A price change is a difference between consecutive observed prices of one
// (store, item) series, dated at the later observation. Missing days are
// skipped; the first observation of a series produces no change.
ChangeLog extract_changes(const PricePanel& panel);

enum class CategoryLabel { random = 0, nyt_bestseller = 1, computer_bestseller = 2 };

constexpr std::array<CategoryLabel, 3> kAllCategories{
    CategoryLabel::random, CategoryLabel::nyt_bestseller, CategoryLabel::computer_bestseller};

std::string_view to_string(CategoryLabel label);
std::optional<CategoryLabel> parse_category_label(std::string_view text);

struct ListingInterval {
    std::string list_name;
    Date start;
    Date end;  // inclusive
};

// An item that ever appeared on a bestseller list keeps its bestseller label
// for its whole history; the intervals record when it was actually listed.
struct Category {
    ItemId item_id;
    CategoryLabel label = CategoryLabel::random;
    std::vector<ListingInterval> intervals;
};

class CategorySet {
public:
    CategorySet() = default;
    // Validates: one record per item, intervals ordered and non-overlapping
    // per list name, start <= end.
    static CategorySet from_records(std::vector<Category> records);

    std::optional<CategoryLabel> label_of(const ItemId& item) const;
    const std::vector<Category>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }

private:
    std::vector<Category> records_;
    std::map<ItemId, CategoryLabel> by_item_;
};

// Category CSV: one record per line, no header:
//   item_id,label[,list_name,start_date,end_date]*
CategorySet parse_categories_csv(std::string_view text);
// JSON-lines equivalent: one object per line with keys item_id, label,
// intervals (list of {list_name, start_date, end_date}).
CategorySet parse_categories_jsonl(std::string_view text);
CategorySet load_categories_file(const std::filesystem::path& path);
std::string categories_to_csv(const CategorySet& categories);

// Partition of a changelog by item category. All three labels are always
// present as keys.
std::map<CategoryLabel, ChangeLog> stratify(const ChangeLog& log, const CategorySet& categories);

struct ChangeCountRow {
    StoreId store_id;
    std::array<std::int64_t, 3> by_category{};  // indexed by CategoryLabel

    std::int64_t total() const { return by_category[0] + by_category[1] + by_category[2]; }
};

struct ChangeCountTable {
    std::vector<ChangeCountRow> rows;  // sorted by store_id
    ChangeCountRow totals;             // store_id = "TOTAL", cells are column sums
};

// Rows cover every store in store_universe plus any store with a change.
ChangeCountTable per_store_change_counts(const std::map<CategoryLabel, ChangeLog>& strata,
                                         std::span<const StoreId> store_universe = {});

}  // namespace lockstep
