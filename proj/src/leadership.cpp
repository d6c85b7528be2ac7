#include "lockstep/leadership.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lockstep/error.hpp"

namespace lockstep {

std::vector<InitiatorStats> classify_initiators(std::span<const Cluster> clusters) {
    std::map<StoreId, InitiatorStats> tally;
    Window window;
    bool window_set = false;

    auto row = [&](const StoreId& store) -> InitiatorStats& {
        auto [it, inserted] = tally.try_emplace(store);
        if (inserted) {
            it->second.store_id = store;
            it->second.window = window;
        }
        return it->second;
    };

    for (const auto& cluster : clusters) {
        if (!window_set) {
            window = cluster.window;
            window_set = true;
        } else if (!(cluster.window == window)) {
            throw Error("classify_initiators: clusters mix windows");
        }
        // Seed zero rows for every participating store.
        for (const auto& store : cluster.distinct_stores) row(store);

        const bool multi = cluster.distinct_stores.size() >= 2;
        std::set<StoreId> credited;
        for (const auto& change : cluster.changes) {
            if (change.date != cluster.first_date) continue;
            if (!credited.insert(change.store_id).second) continue;
            auto& stats = row(change.store_id);
            if (multi) {
                stats.first_of_multiple_count += 1;
            } else {
                stats.single_count += 1;
            }
        }
    }

    // Backfill the window on rows created before the first cluster set it
    // (only possible when clusters is empty, but keep the loop for safety).
    std::vector<InitiatorStats> out;
    out.reserve(tally.size());
    for (auto& [store, stats] : tally) {
        stats.window = window;
        out.push_back(std::move(stats));
    }
    return out;
}

LeaderRatio leader_ratio(const InitiatorStats& stats) {
    LeaderRatio result;
    result.store_id = stats.store_id;
    if (stats.first_of_multiple_count > 0) {
        result.ratio = static_cast<double>(stats.single_count) /
                       static_cast<double>(stats.first_of_multiple_count);
    }
    return result;
}

const LagCell& LagTable::cell(const StoreId& store, int d) const {
    if (d < -k || d > k) throw Error("lag offset out of range");
    for (const auto& row : rows) {
        if (row.store_id == store) return row.cells[static_cast<std::size_t>(d + k)];
    }
    throw Error("store not present in lag table: " + store);
}

std::vector<int> LagTable::offsets() const {
    std::vector<int> out;
    for (int d = -k; d <= k; ++d) out.push_back(d);
    return out;
}

CarriedMap default_carried(const PricePanel& panel) {
    CarriedMap carried;
    for (const auto& obs : panel.observations()) {
        carried[obs.item_id].insert(obs.store_id);
    }
    return carried;
}

LagTable lag_distribution(const ChangeLog& changelog, const StoreId& focal, int k,
                          const CarriedMap& carried) {
    if (k < 1) throw Error("lag_distribution: k must be at least 1");

    // (store, item) -> sorted change dates, plus the focal's date -> items map.
    std::map<StoreId, std::map<ItemId, std::set<Date>>> change_dates;
    std::map<Date, std::vector<ItemId>> focal_days;
    for (const auto& item : changelog.items()) {
        for (const auto& change : changelog.for_item(item)) {
            change_dates[change.store_id][item].insert(change.date);
            if (change.store_id == focal) focal_days[change.date].push_back(item);
        }
    }
    if (focal_days.empty()) {
        throw Error("focal store has no price changes in the changelog: " + focal);
    }

    // Row universe: every store seen in the changelog or the carried relation,
    // plus the focal itself, so table shapes do not depend on activity.
    std::set<StoreId> stores;
    stores.insert(focal);
    for (const auto& [store, _] : change_dates) stores.insert(store);
    for (const auto& [item, holders] : carried) stores.insert(holders.begin(), holders.end());

    LagTable table;
    table.focal_store = focal;
    table.k = k;
    const std::size_t width = static_cast<std::size_t>(2 * k + 1);
    for (const auto& store : stores) {
        LagRow row;
        row.store_id = store;
        row.cells.assign(width, LagCell{});
        table.rows.push_back(std::move(row));
    }

    auto carries = [&](const StoreId& store, const ItemId& item) {
        auto it = carried.find(item);
        return it != carried.end() && it->second.count(store) > 0;
    };

    for (const auto& [t, items] : focal_days) {
        for (auto& row : table.rows) {
            const auto store_it = change_dates.find(row.store_id);
            for (const auto& item : items) {
                if (!carries(row.store_id, item)) continue;
                const std::set<Date>* dates = nullptr;
                if (store_it != change_dates.end()) {
                    auto item_it = store_it->second.find(item);
                    if (item_it != store_it->second.end()) dates = &item_it->second;
                }
                for (int d = -k; d <= k; ++d) {
                    auto& cell = row.cells[static_cast<std::size_t>(d + k)];
                    cell.denominator += 1;
                    if (row.store_id == focal && d == 0) continue;  // pinned to 0
                    if (dates != nullptr && dates->count(t + d) > 0) cell.numerator += 1;
                }
            }
        }
    }
    return table;
}

std::vector<ScreenHit> follow_screen(const LagTable& table, double threshold) {
    std::vector<ScreenHit> hits;
    for (const auto& row : table.rows) {
        if (row.store_id == table.focal_store) continue;
        ScreenHit best;
        best.store_id = row.store_id;
        bool any = false;
        for (int d = 0; d <= table.k; ++d) {
            const double f = row.cells[static_cast<std::size_t>(d + table.k)].fraction();
            if (!any || f > best.peak_fraction) {
                best.peak_day = d;
                best.peak_fraction = f;
                any = true;
            }
        }
        if (any && best.peak_fraction > threshold) hits.push_back(best);
    }
    std::sort(hits.begin(), hits.end(), [](const ScreenHit& a, const ScreenHit& b) {
        if (a.peak_fraction != b.peak_fraction) return a.peak_fraction > b.peak_fraction;
        return a.store_id < b.store_id;
    });
    return hits;
}

namespace {

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

std::string offset_header(const LagTable& table) {
    std::string line = "store_id";
    for (int d = -table.k; d <= table.k; ++d) {
        line += ",d";
        if (d >= 0) line.push_back('+');
        line += std::to_string(d);
    }
    return line;
}

}  // namespace

std::string lag_table_to_csv(const LagTable& table) {
    std::string out = offset_header(table) + "\n";
    for (const auto& row : table.rows) {
        out += csv_quote(row.store_id);
        for (const auto& cell : row.cells) {
            const long pct = std::lround(cell.fraction() * 100.0);
            out.push_back(',');
            out += std::to_string(pct);
        }
        out.push_back('\n');
    }
    return out;
}

std::string lag_counts_to_csv(const LagTable& table) {
    std::string out = offset_header(table) + "\n";
    for (const auto& row : table.rows) {
        out += csv_quote(row.store_id);
        for (const auto& cell : row.cells) {
            out.push_back(',');
            out += std::to_string(cell.numerator);
            out.push_back('/');
            out += std::to_string(cell.denominator);
        }
        out.push_back('\n');
    }
    return out;
}

}  // namespace lockstep
