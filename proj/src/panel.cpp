#include "lockstep/panel.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "lockstep/error.hpp"
#include "lockstep/hash.hpp"

namespace lockstep {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    // Drop the empty pseudo-line after a trailing newline.
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    for (auto& line : lines) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    }
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return fields;
}

std::optional<std::int64_t> parse_price_cents(std::string_view s) {
    if (s.empty() || s.size() > 18) return std::nullopt;
    std::int64_t v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + (c - '0');
    }
    return v;
}

std::string key_string(const StoreId& store, const ItemId& item, Date date) {
    return "store=" + store + ", item=" + item + ", date=" + date.to_string();
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(path.string() + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

}  // namespace

PricePanel PricePanel::from_observations(std::vector<PriceObservation> observations) {
    for (const auto& o : observations) {
        if (o.price_cents < 0) {
            throw Error("negative price for (" + key_string(o.store_id, o.item_id, o.date) + ")");
        }
        if (o.store_id.empty()) throw Error("empty store_id in observation");
        if (o.item_id.empty()) throw Error("empty item_id in observation");
    }
    std::sort(observations.begin(), observations.end(), [](const auto& a, const auto& b) {
        return std::tie(a.store_id, a.item_id, a.date, a.price_cents) <
               std::tie(b.store_id, b.item_id, b.date, b.price_cents);
    });

    PricePanel panel;
    panel.observations_.reserve(observations.size());
    for (auto& o : observations) {
        if (!panel.observations_.empty()) {
            const auto& prev = panel.observations_.back();
            if (prev.store_id == o.store_id && prev.item_id == o.item_id && prev.date == o.date) {
                if (prev.price_cents == o.price_cents) continue;  // exact duplicate
                throw Error("conflicting observations for (" +
                            key_string(o.store_id, o.item_id, o.date) + "): " +
                            std::to_string(prev.price_cents) + " vs " +
                            std::to_string(o.price_cents) + " cents");
            }
        }
        panel.observations_.push_back(std::move(o));
    }

    std::set<StoreId> stores;
    std::set<ItemId> items;
    std::set<Date> dates;
    for (const auto& o : panel.observations_) {
        stores.insert(o.store_id);
        items.insert(o.item_id);
        dates.insert(o.date);
    }
    panel.stores_.assign(stores.begin(), stores.end());
    panel.items_.assign(items.begin(), items.end());
    panel.distinct_dates_ = dates.size();
    if (!dates.empty()) panel.date_range_ = DateRange{*dates.begin(), *dates.rbegin()};
    return panel;
}

std::string PricePanel::to_csv() const {
    std::string out(kObservationCsvHeader);
    out.push_back('\n');
    for (const auto& o : observations_) {
        out += o.date.to_string();
        out.push_back(',');
        out += o.store_id;
        out.push_back(',');
        out += o.item_id;
        out.push_back(',');
        out += std::to_string(o.price_cents);
        out.push_back('\n');
    }
    return out;
}

std::string PricePanel::digest() const { return to_hex64(fnv1a64(to_csv())); }

std::vector<PriceObservation> parse_observation_csv(std::string_view text) {
    std::vector<PriceObservation> out;
    auto lines = split_lines(text);
    if (lines.empty()) return out;  // empty input: empty panel

    if (lines[0] != kObservationCsvHeader) {
        throw Error("line 1: expected header '" + std::string(kObservationCsvHeader) + "'");
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(i + 1) + ": ";
        auto fields = split_fields(line);
        if (fields.size() != 4) {
            throw Error(where + "expected 4 fields, got " + std::to_string(fields.size()));
        }
        auto date = Date::try_parse(fields[0]);
        if (!date) {
            throw Error(where + "invalid date '" + std::string(fields[0]) +
                        "' (expected YYYY-MM-DD)");
        }
        if (fields[1].empty()) throw Error(where + "empty store_id");
        if (fields[2].empty()) throw Error(where + "empty item_id");
        auto price = parse_price_cents(fields[3]);
        if (!price) {
            throw Error(where + "invalid price_cents '" + std::string(fields[3]) +
                        "' (expected non-negative integer)");
        }
        out.push_back({std::string(fields[1]), std::string(fields[2]), *date, *price});
    }
    return out;
}

PricePanel ingest_observations(std::string_view csv_text) {
    return PricePanel::from_observations(parse_observation_csv(csv_text));
}

PricePanel ingest_observations_file(const std::filesystem::path& path) {
    try {
        return ingest_observations(read_file(path));
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

ChangeLog ChangeLog::from_changes(std::vector<PriceChange> changes) {
    std::sort(changes.begin(), changes.end(), [](const auto& a, const auto& b) {
        return std::tie(a.item_id, a.date, a.store_id) < std::tie(b.item_id, b.date, b.store_id);
    });
    for (std::size_t i = 0; i < changes.size(); ++i) {
        const auto& c = changes[i];
        if (c.new_price == c.prev_price) {
            throw Error("zero-delta change for (" + key_string(c.store_id, c.item_id, c.date) +
                        ")");
        }
        if (!(c.prev_date < c.date)) {
            throw Error("change with prev_date >= date for (" +
                        key_string(c.store_id, c.item_id, c.date) + ")");
        }
        if (i > 0) {
            const auto& p = changes[i - 1];
            if (p.item_id == c.item_id && p.date == c.date && p.store_id == c.store_id) {
                throw Error("duplicate change for (" + key_string(c.store_id, c.item_id, c.date) +
                            ")");
            }
        }
    }
    ChangeLog log;
    log.changes_ = std::move(changes);
    return log;
}

std::vector<ItemId> ChangeLog::items() const {
    std::vector<ItemId> out;
    for (const auto& c : changes_) {
        if (out.empty() || out.back() != c.item_id) out.push_back(c.item_id);
    }
    return out;
}

std::vector<StoreId> ChangeLog::stores() const {
    std::set<StoreId> stores;
    for (const auto& c : changes_) stores.insert(c.store_id);
    return {stores.begin(), stores.end()};
}

std::span<const PriceChange> ChangeLog::for_item(const ItemId& item) const {
    auto lo = std::lower_bound(changes_.begin(), changes_.end(), item,
                               [](const PriceChange& c, const ItemId& i) { return c.item_id < i; });
    auto hi = std::upper_bound(changes_.begin(), changes_.end(), item,
                               [](const ItemId& i, const PriceChange& c) { return i < c.item_id; });
    return {lo, hi};
}

ChangeLog extract_changes(const PricePanel& panel) {
    std::vector<PriceChange> changes;
    const auto& obs = panel.observations();
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (i > 0 && obs[i - 1].store_id == obs[i].store_id &&
            obs[i - 1].item_id == obs[i].item_id) {
            const auto& prev = obs[i - 1];
            const auto& cur = obs[i];
            if (cur.price_cents != prev.price_cents) {
                changes.push_back({cur.store_id, cur.item_id, cur.date, prev.date,
                                   prev.price_cents, cur.price_cents});
            }
        }
    }
    return ChangeLog::from_changes(std::move(changes));
}

std::string_view to_string(CategoryLabel label) {
    switch (label) {
        case CategoryLabel::random: return "random";
        case CategoryLabel::nyt_bestseller: return "nyt_bestseller";
        case CategoryLabel::computer_bestseller: return "computer_bestseller";
    }
    return "random";
}

std::optional<CategoryLabel> parse_category_label(std::string_view text) {
    for (CategoryLabel label : kAllCategories) {
        if (text == to_string(label)) return label;
    }
    return std::nullopt;
}

CategorySet CategorySet::from_records(std::vector<Category> records) {
    std::sort(records.begin(), records.end(),
              [](const auto& a, const auto& b) { return a.item_id < b.item_id; });
    CategorySet set;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto& rec = records[i];
        if (rec.item_id.empty()) throw Error("category record with empty item_id");
        if (i > 0 && records[i - 1].item_id == rec.item_id) {
            throw Error("item " + rec.item_id + " has multiple category records");
        }
        std::sort(rec.intervals.begin(), rec.intervals.end(), [](const auto& a, const auto& b) {
            return std::tie(a.list_name, a.start, a.end) < std::tie(b.list_name, b.start, b.end);
        });
        for (std::size_t k = 0; k < rec.intervals.size(); ++k) {
            const auto& iv = rec.intervals[k];
            if (iv.list_name.empty()) {
                throw Error("item " + rec.item_id + ": interval with empty list_name");
            }
            if (iv.end < iv.start) {
                throw Error("item " + rec.item_id + ": interval on list " + iv.list_name +
                            " has start > end");
            }
            if (k > 0 && rec.intervals[k - 1].list_name == iv.list_name &&
                iv.start <= rec.intervals[k - 1].end) {
                throw Error("item " + rec.item_id + ": overlapping intervals on list " +
                            iv.list_name);
            }
        }
        set.by_item_.emplace(rec.item_id, rec.label);
    }
    set.records_ = std::move(records);
    return set;
}

std::optional<CategoryLabel> CategorySet::label_of(const ItemId& item) const {
    auto it = by_item_.find(item);
    if (it == by_item_.end()) return std::nullopt;
    return it->second;
}

CategorySet parse_categories_csv(std::string_view text) {
    std::vector<Category> records;
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(i + 1) + ": ";
        auto fields = split_fields(line);
        if (fields.size() < 2) throw Error(where + "expected at least item_id and label");
        if ((fields.size() - 2) % 3 != 0) {
            throw Error(where + "intervals must come as (list_name,start_date,end_date) triples");
        }
        Category rec;
        rec.item_id = std::string(fields[0]);
        if (rec.item_id.empty()) throw Error(where + "empty item_id");
        auto label = parse_category_label(fields[1]);
        if (!label) {
            throw Error(where + "unknown category label '" + std::string(fields[1]) +
                        "' (expected random, nyt_bestseller, or computer_bestseller)");
        }
        rec.label = *label;
        for (std::size_t f = 2; f < fields.size(); f += 3) {
            ListingInterval iv;
            iv.list_name = std::string(fields[f]);
            auto start = Date::try_parse(fields[f + 1]);
            auto end = Date::try_parse(fields[f + 2]);
            if (!start || !end) throw Error(where + "invalid interval date");
            iv.start = *start;
            iv.end = *end;
            rec.intervals.push_back(std::move(iv));
        }
        records.push_back(std::move(rec));
    }
    try {
        return CategorySet::from_records(std::move(records));
    } catch (const Error& e) {
        throw Error(std::string("category records: ") + e.what());
    }
}

CategorySet parse_categories_jsonl(std::string_view text) {
    std::vector<Category> records;
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(i + 1) + ": ";
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(where + "invalid JSON: " + e.what());
        }
        if (!obj.is_object()) throw Error(where + "expected a JSON object");
        Category rec;
        if (!obj.contains("item_id") || !obj["item_id"].is_string()) {
            throw Error(where + "missing string field 'item_id'");
        }
        rec.item_id = obj["item_id"].get<std::string>();
        if (!obj.contains("label") || !obj["label"].is_string()) {
            throw Error(where + "missing string field 'label'");
        }
        auto label = parse_category_label(obj["label"].get<std::string>());
        if (!label) throw Error(where + "unknown category label");
        rec.label = *label;
        if (obj.contains("intervals")) {
            if (!obj["intervals"].is_array()) throw Error(where + "'intervals' must be an array");
            for (const auto& iv_obj : obj["intervals"]) {
                ListingInterval iv;
                if (!iv_obj.contains("list_name") || !iv_obj.contains("start_date") ||
                    !iv_obj.contains("end_date")) {
                    throw Error(where + "interval needs list_name, start_date, end_date");
                }
                iv.list_name = iv_obj["list_name"].get<std::string>();
                iv.start = Date::parse(iv_obj["start_date"].get<std::string>());
                iv.end = Date::parse(iv_obj["end_date"].get<std::string>());
                rec.intervals.push_back(std::move(iv));
            }
        }
        records.push_back(std::move(rec));
    }
    try {
        return CategorySet::from_records(std::move(records));
    } catch (const Error& e) {
        throw Error(std::string("category records: ") + e.what());
    }
}

CategorySet load_categories_file(const std::filesystem::path& path) {
    std::string text = read_file(path);
    try {
        auto ext = path.extension().string();
        if (ext == ".jsonl" || ext == ".ndjson") return parse_categories_jsonl(text);
        return parse_categories_csv(text);
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

std::string categories_to_csv(const CategorySet& categories) {
    std::string out;
    for (const auto& rec : categories.records()) {
        out += rec.item_id;
        out.push_back(',');
        out += to_string(rec.label);
        for (const auto& iv : rec.intervals) {
            out.push_back(',');
            out += iv.list_name;
            out.push_back(',');
            out += iv.start.to_string();
            out.push_back(',');
            out += iv.end.to_string();
        }
        out.push_back('\n');
    }
    return out;
}

std::map<CategoryLabel, ChangeLog> stratify(const ChangeLog& log, const CategorySet& categories) {
    std::map<CategoryLabel, std::vector<PriceChange>> groups;
    for (CategoryLabel label : kAllCategories) groups[label];

    std::set<ItemId> missing;
    for (const auto& change : log.changes()) {
        auto label = categories.label_of(change.item_id);
        if (!label) {
            missing.insert(change.item_id);
            continue;
        }
        groups[*label].push_back(change);
    }
    if (!missing.empty()) {
        std::string ids;
        std::size_t shown = 0;
        for (const auto& id : missing) {
            if (shown == 10) {
                ids += " (+" + std::to_string(missing.size() - shown) + " more)";
                break;
            }
            if (shown > 0) ids += ", ";
            ids += id;
            ++shown;
        }
        throw Error("items without a category record: " + ids);
    }

    std::map<CategoryLabel, ChangeLog> out;
    for (auto& [label, changes] : groups) {
        out.emplace(label, ChangeLog::from_changes(std::move(changes)));
    }
    return out;
}

ChangeCountTable per_store_change_counts(const std::map<CategoryLabel, ChangeLog>& strata,
                                         std::span<const StoreId> store_universe) {
    std::map<StoreId, ChangeCountRow> rows;
    for (const auto& store : store_universe) {
        rows.emplace(store, ChangeCountRow{store, {}});
    }
    for (const auto& [label, log] : strata) {
        for (const auto& change : log.changes()) {
            auto [it, inserted] = rows.emplace(change.store_id, ChangeCountRow{change.store_id, {}});
            it->second.by_category[static_cast<std::size_t>(label)] += 1;
        }
    }
    ChangeCountTable table;
    table.totals.store_id = "TOTAL";
    for (auto& [store, row] : rows) {
        for (std::size_t k = 0; k < row.by_category.size(); ++k) {
            table.totals.by_category[k] += row.by_category[k];
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace lockstep
