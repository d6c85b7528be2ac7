#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lockstep/clusters.hpp"
#include "lockstep/panel.hpp"

namespace lockstep {

// Per-store tally of first-day cluster changes, split by whether anyone else
// ever joined the cluster. A store followed only by its own later changes
// still counts as single.
struct InitiatorStats {
    StoreId store_id;
    Window window;
    std::int64_t single_count = 0;
    std::int64_t first_of_multiple_count = 0;
};

// Every store with a change dated on a cluster's first day gets initiator
// credit; ties on the first day each get credit. Stores that appear in some
// cluster but never initiate still get a zero row so table shapes are stable.
std::vector<InitiatorStats> classify_initiators(std::span<const Cluster> clusters);

// single / first_of_multiple. Lower means the store more often moves alone,
// i.e. is not being shadowed. nullopt when there is no multi-store evidence.
struct LeaderRatio {
    StoreId store_id;
    std::optional<double> ratio;
};

LeaderRatio leader_ratio(const InitiatorStats& stats);

// One (store, relative day) cell of a lag table. Fractions are pooled across
// all focal-change dates: sum of numerators over sum of denominators.
struct LagCell {
    std::int64_t numerator = 0;
    std::int64_t denominator = 0;

    double fraction() const {
        return denominator == 0 ? 0.0 : static_cast<double>(numerator) / static_cast<double>(denominator);
    }
    bool zero_support() const { return denominator == 0; }
};

struct LagRow {
    StoreId store_id;
    // cells[j] covers relative day d = j - k for a table of half-width k.
    std::vector<LagCell> cells;
};

struct LagTable {
    StoreId focal_store;
    int k = 0;
    CategoryLabel category = CategoryLabel::random;
    std::vector<LagRow> rows;  // sorted by store_id; includes the focal's own row

    const LagCell& cell(const StoreId& store, int d) const;
    std::vector<int> offsets() const;  // -k .. +k
};

// item -> stores that stock it. Used as the lag-table denominator filter.
using CarriedMap = std::map<ItemId, std::set<StoreId>>;

// Default carried relation: a store carries an item if it has at least one
// price observation for it anywhere in the panel.
CarriedMap default_carried(const PricePanel& panel);

// For every date the focal store changed at least one price, count how many of
// those items each other store carried (denominator) and changed exactly d
// days later (numerator), d in [-k, +k]. The focal's own row uses the same
// arithmetic for d != 0 (self-re-changes) and is pinned to 0 at d = 0.
// Throws if the focal store has no changes in the changelog.
LagTable lag_distribution(const ChangeLog& changelog, const StoreId& focal, int k,
                          const CarriedMap& carried);

// A store whose peak fraction over d in [0, +k] clears the threshold. The
// focal's own row is never screened; self-re-changes are not following.
struct ScreenHit {
    StoreId store_id;
    int peak_day = 0;
    double peak_fraction = 0.0;
};

// Hits sorted by descending peak fraction, then store id. Informational only.
std::vector<ScreenHit> follow_screen(const LagTable& table, double threshold);

// CSV exports: percentages with whole-percent cells, plus a companion file of
// raw numerator/denominator counts.
std::string lag_table_to_csv(const LagTable& table);
std::string lag_counts_to_csv(const LagTable& table);

}  // namespace lockstep
