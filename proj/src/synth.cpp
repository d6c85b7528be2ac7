#include "lockstep/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "lockstep/error.hpp"

namespace lockstep::synth {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view behavior_kind(const StoreBehavior& behavior) {
    if (std::holds_alternative<IndependentParams>(behavior)) return "independent";
    if (std::holds_alternative<ListResponderParams>(behavior)) return "list_responder";
    return "follower";
}

int SimConfig::items_total() const {
    int total = 0;
    for (const auto& [label, count] : item_counts) total += count;
    return total;
}

namespace {

void check_unit(double value, const std::string& field, bool open_top = false) {
    const bool bad = !std::isfinite(value) || value < 0.0 || (open_top ? value >= 1.0 : value > 1.0);
    if (bad) {
        throw Error(field + ": must be in [0,1" + (open_top ? ")" : "]") + ", got " +
                    std::to_string(value));
    }
}

void normalize_lag_weights(std::vector<double>& weights, const std::string& field) {
    if (weights.empty()) throw Error(field + ": lag distribution must have at least one weight");
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw Error(field + ": weights must be non-negative");
        total += w;
    }
    if (total <= 0.0) throw Error(field + ": weights must not all be zero");
    for (double& w : weights) w /= total;
}

}  // namespace

void validate(SimConfig& config) {
    if (config.horizon_days < 1) throw Error("horizon_days: must be at least 1");
    if (config.stores.empty()) throw Error("stores: at least one store required");
    if (config.list_price_min_cents < 1) throw Error("list_price_cents.min: must be at least 1");
    if (config.list_price_max_cents < config.list_price_min_cents) {
        throw Error("list_price_cents.max: must be >= min");
    }
    check_unit(config.missingness, "missingness", /*open_top=*/true);

    int total_items = 0;
    for (const auto& [label, count] : config.item_counts) {
        if (count < 0) {
            throw Error("items." + std::string(to_string(label)) + ": must be non-negative");
        }
        total_items += count;
    }
    if (total_items < 1) throw Error("items: at least one item required");

    for (const auto& [label, params] : config.lists) {
        const std::string field = "lists." + std::string(to_string(label));
        if (label == CategoryLabel::random) {
            throw Error(field + ": random items cannot be listed");
        }
        if (params.size < 0) throw Error(field + ".size: must be non-negative");
        check_unit(params.turnover, field + ".turnover");
    }

    std::set<StoreId> ids;
    for (std::size_t i = 0; i < config.stores.size(); ++i) {
        auto& store = config.stores[i];
        const std::string field = "stores[" + std::to_string(i) + "]";
        if (store.store_id.empty()) throw Error(field + ".store_id: must not be empty");
        if (!ids.insert(store.store_id).second) {
            throw Error(field + ".store_id: duplicate store id " + store.store_id);
        }
        if (auto* ind = std::get_if<IndependentParams>(&store.behavior)) {
            check_unit(ind->hazard, field + ".hazard");
            check_unit(ind->max_move, field + ".max_move", /*open_top=*/true);
        } else if (auto* resp = std::get_if<ListResponderParams>(&store.behavior)) {
            normalize_lag_weights(resp->lag_weights, field + ".lag_weights");
            check_unit(resp->on_list_discount, field + ".on_list_discount");
            if (!std::isfinite(resp->off_list_markup) || resp->off_list_markup < 0.0) {
                throw Error(field + ".off_list_markup: must be non-negative");
            }
        } else {
            auto& fol = std::get<FollowerParams>(store.behavior);
            check_unit(fol.follow_probability, field + ".follow_probability");
            normalize_lag_weights(fol.lag_weights, field + ".lag_weights");
            if (fol.target == store.store_id) {
                throw Error(field + ".target: follower cannot target itself");
            }
        }
    }

    // Follower targets must exist, and follower chains must bottom out at a
    // non-follower (otherwise the first price would be undefined).
    std::map<StoreId, const StoreSpec*> by_id;
    for (const auto& store : config.stores) by_id[store.store_id] = &store;
    for (std::size_t i = 0; i < config.stores.size(); ++i) {
        const auto* fol = std::get_if<FollowerParams>(&config.stores[i].behavior);
        if (fol == nullptr) continue;
        const std::string field = "stores[" + std::to_string(i) + "].target";
        std::set<StoreId> chain{config.stores[i].store_id};
        StoreId at = fol->target;
        while (true) {
            auto it = by_id.find(at);
            if (it == by_id.end()) throw Error(field + ": unknown store " + at);
            if (!chain.insert(at).second) {
                throw Error(field + ": follower cycle through " + at);
            }
            const auto* next = std::get_if<FollowerParams>(&it->second->behavior);
            if (next == nullptr) break;
            at = next->target;
        }
    }
}

ItemId make_item_id(CategoryLabel category, int index) {
    if (index < 0 || index >= 99999999) throw Error("item index out of range");
    char block = '0';
    if (category == CategoryLabel::nyt_bestseller) block = '1';
    if (category == CategoryLabel::computer_bestseller) block = '2';
    char body[16];
    std::snprintf(body, sizeof body, "978%c%08d", block, index + 1);
    int sum = 0;
    for (int i = 0; i < 12; ++i) {
        const int digit = body[i] - '0';
        sum += (i % 2 == 0) ? digit : 3 * digit;
    }
    const int check = (10 - sum % 10) % 10;
    return std::string(body, 12) + static_cast<char>('0' + check);
}

namespace {

std::vector<ItemInfo> make_items(const SimConfig& config, const SplitRng& root) {
    std::vector<ItemInfo> items;
    for (CategoryLabel label : kAllCategories) {
        auto it = config.item_counts.find(label);
        const int count = it == config.item_counts.end() ? 0 : it->second;
        for (int i = 0; i < count; ++i) {
            ItemInfo info;
            info.item_id = make_item_id(label, i);
            info.category = label;
            info.list_price_cents = root.stream("list_price", info.item_id)
                                        .next_int(config.list_price_min_cents,
                                                  config.list_price_max_cents);
            items.push_back(std::move(info));
        }
    }
    return items;
}

std::int64_t clamp_price(double cents) {
    const auto rounded = static_cast<std::int64_t>(std::llround(cents));
    return std::max<std::int64_t>(rounded, 1);
}

}  // namespace

CategorySet make_bestseller_calendar(const SimConfig& config, std::uint64_t seed) {
    const SplitRng root(seed);
    std::vector<Category> records;
    std::map<CategoryLabel, std::vector<std::size_t>> pool;  // label -> record indices
    for (CategoryLabel label : kAllCategories) {
        auto it = config.item_counts.find(label);
        const int count = it == config.item_counts.end() ? 0 : it->second;
        for (int i = 0; i < count; ++i) {
            pool[label].push_back(records.size());
            records.push_back(Category{make_item_id(label, i), label, {}});
        }
    }

    const Date last_day = config.start_date + (config.horizon_days - 1);
    const int weeks = (config.horizon_days + 6) / 7;

    for (const auto& [label, params] : config.lists) {
        const auto& indices = pool[label];
        const int size = std::min<int>(params.size, static_cast<int>(indices.size()));
        if (size <= 0 || indices.empty()) continue;

        SplitRng rng = root.stream("calendar", to_string(label));
        std::set<int> listed;  // positions within `indices`
        for (int i = 0; i < size; ++i) listed.insert(i);

        std::vector<std::set<int>> by_week{listed};
        for (int w = 1; w < weeks; ++w) {
            const std::set<int> prev = by_week.back();
            std::set<int> next = prev;
            std::vector<int> departing;
            for (int pos : prev) {
                if (rng.bernoulli(params.turnover)) departing.push_back(pos);
            }
            std::vector<int> candidates;
            for (int pos = 0; pos < static_cast<int>(indices.size()); ++pos) {
                if (prev.count(pos) == 0) candidates.push_back(pos);
            }
            for (int pos : departing) {
                if (candidates.empty()) break;  // nobody left to promote; keep the incumbent
                const auto pick = static_cast<std::size_t>(
                    rng.next_int(0, static_cast<std::int64_t>(candidates.size()) - 1));
                next.erase(pos);
                next.insert(candidates[pick]);
                candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
            }
            by_week.push_back(std::move(next));
        }

        // Collapse consecutive listed weeks into intervals, clipped to the horizon.
        for (int pos = 0; pos < static_cast<int>(indices.size()); ++pos) {
            auto& intervals = records[indices[static_cast<std::size_t>(pos)]].intervals;
            int run_start = -1;
            for (int w = 0; w <= weeks; ++w) {
                const bool on = w < weeks && by_week[static_cast<std::size_t>(w)].count(pos) > 0;
                if (on && run_start < 0) run_start = w;
                if (!on && run_start >= 0) {
                    ListingInterval interval;
                    interval.list_name = std::string(to_string(label));
                    interval.start = config.start_date + 7 * run_start;
                    Date end = config.start_date + (7 * w - 1);
                    interval.end = end < last_day ? end : last_day;
                    intervals.push_back(std::move(interval));
                    run_start = -1;
                }
            }
        }
    }
    return CategorySet::from_records(std::move(records));
}

namespace {

using PriceSeries = std::vector<std::int64_t>;  // one price per day

// Store generation order: followers after their targets.
std::vector<const StoreSpec*> topo_order(const std::vector<StoreSpec>& stores) {
    std::map<StoreId, const StoreSpec*> by_id;
    for (const auto& store : stores) by_id[store.store_id] = &store;
    std::vector<const StoreSpec*> order;
    std::set<StoreId> done;
    // validate() already rejected cycles, so plain chain-walking terminates.
    auto emit = [&](const StoreSpec* spec, auto&& self) -> void {
        if (done.count(spec->store_id) > 0) return;
        if (const auto* fol = std::get_if<FollowerParams>(&spec->behavior)) {
            self(by_id.at(fol->target), self);
        }
        done.insert(spec->store_id);
        order.push_back(spec);
    };
    for (const auto& store : stores) emit(&store, emit);
    return order;
}

void apply_pending(PriceSeries& series, const std::map<int, std::int64_t>& pending) {
    for (std::size_t d = 1; d < series.size(); ++d) {
        series[d] = series[d - 1];
        auto it = pending.find(static_cast<int>(d));
        if (it != pending.end()) series[d] = it->second;
    }
}

}  // namespace

SimResult simulate(SimConfig config, std::uint64_t seed) {
    validate(config);
    const int horizon = config.horizon_days;
    const SplitRng root(seed);

    std::vector<ItemInfo> items = make_items(config, root);
    CategorySet categories = make_bestseller_calendar(config, seed);

    // Per-item listing status by day, for the responders.
    std::map<ItemId, std::vector<char>> on_list;
    for (const auto& record : categories.records()) {
        std::vector<char> status(static_cast<std::size_t>(horizon), 0);
        for (const auto& interval : record.intervals) {
            int from = interval.start - config.start_date;
            int to = interval.end - config.start_date;
            from = std::max(from, 0);
            to = std::min(to, horizon - 1);
            for (int d = from; d <= to; ++d) status[static_cast<std::size_t>(d)] = 1;
        }
        on_list.emplace(record.item_id, std::move(status));
    }

    std::map<StoreId, std::vector<PriceSeries>> prices;  // store -> item index -> series
    for (const StoreSpec* spec : topo_order(config.stores)) {
        const StoreId& sid = spec->store_id;
        std::vector<PriceSeries> series_by_item(items.size());
        for (std::size_t ix = 0; ix < items.size(); ++ix) {
            const ItemInfo& item = items[ix];
            SplitRng rng = root.stream("price", sid).stream("item", item.item_id);
            PriceSeries series(static_cast<std::size_t>(horizon));
            const auto list_price = static_cast<double>(item.list_price_cents);

            if (const auto* ind = std::get_if<IndependentParams>(&spec->behavior)) {
                series[0] = item.list_price_cents;
                for (int d = 1; d < horizon; ++d) {
                    series[static_cast<std::size_t>(d)] = series[static_cast<std::size_t>(d - 1)];
                    if (rng.bernoulli(ind->hazard)) {
                        const double shift =
                            -ind->max_move + 2.0 * ind->max_move * rng.next_unit();
                        series[static_cast<std::size_t>(d)] =
                            clamp_price(list_price * (1.0 + shift));
                    }
                }
            } else if (const auto* resp = std::get_if<ListResponderParams>(&spec->behavior)) {
                const auto& status = on_list.at(item.item_id);
                const std::int64_t on_price =
                    clamp_price(list_price * (1.0 - resp->on_list_discount));
                const std::int64_t off_price =
                    clamp_price(list_price * (1.0 + resp->off_list_markup));
                series[0] = status[0] ? on_price : off_price;
                std::map<int, std::int64_t> pending;
                for (int t = 1; t < horizon; ++t) {
                    if (status[static_cast<std::size_t>(t)] ==
                        status[static_cast<std::size_t>(t - 1)]) {
                        continue;
                    }
                    const int lag = static_cast<int>(rng.weighted_index(resp->lag_weights));
                    const int apply = t + lag;
                    if (apply < horizon) {
                        pending.insert_or_assign(
                            apply, status[static_cast<std::size_t>(t)] ? on_price : off_price);
                    }
                }
                apply_pending(series, pending);
            } else {
                const auto& fol = std::get<FollowerParams>(spec->behavior);
                const PriceSeries& target = prices.at(fol.target)[ix];
                series[0] = target[0];
                std::map<int, std::int64_t> pending;
                for (int t = 1; t < horizon; ++t) {
                    if (target[static_cast<std::size_t>(t)] ==
                        target[static_cast<std::size_t>(t - 1)]) {
                        continue;
                    }
                    if (!rng.bernoulli(fol.follow_probability)) continue;
                    const int lag = static_cast<int>(rng.weighted_index(fol.lag_weights));
                    const int apply = t + lag;
                    if (apply < horizon) {
                        pending.insert_or_assign(apply, target[static_cast<std::size_t>(t)]);
                    }
                }
                apply_pending(series, pending);
            }
            series_by_item[ix] = std::move(series);
        }
        prices.emplace(sid, std::move(series_by_item));
    }

    std::vector<PriceObservation> observations;
    observations.reserve(prices.size() * items.size() * static_cast<std::size_t>(horizon));
    for (const auto& spec : config.stores) {
        const auto& series_by_item = prices.at(spec.store_id);
        for (std::size_t ix = 0; ix < items.size(); ++ix) {
            SplitRng rng = root.stream("miss", spec.store_id).stream("item", items[ix].item_id);
            for (int d = 0; d < horizon; ++d) {
                const bool dropped = rng.bernoulli(config.missingness);
                if (dropped) continue;
                PriceObservation obs;
                obs.store_id = spec.store_id;
                obs.item_id = items[ix].item_id;
                obs.date = config.start_date + d;
                obs.price_cents = series_by_item[ix][static_cast<std::size_t>(d)];
                observations.push_back(std::move(obs));
            }
        }
    }

    SimResult result;
    result.panel = PricePanel::from_observations(std::move(observations));
    result.truth.stores = config.stores;
    result.truth.items = std::move(items);
    result.truth.categories = std::move(categories);
    return result;
}

SimResult confound_scenario(SimConfig config, std::uint64_t seed) {
    for (std::size_t i = 0; i < config.stores.size(); ++i) {
        if (std::holds_alternative<FollowerParams>(config.stores[i].behavior)) {
            throw Error("stores[" + std::to_string(i) +
                        "]: confound scenario must not contain followers");
        }
    }
    return simulate(std::move(config), seed);
}

std::string ground_truth_to_jsonl(const GroundTruth& truth) {
    std::string out;
    auto emit = [&out](const ordered_json& line) {
        out += line.dump();
        out.push_back('\n');
    };
    for (const auto& store : truth.stores) {
        ordered_json line;
        line["record"] = "store";
        line["store_id"] = store.store_id;
        line["behavior"] = std::string(behavior_kind(store.behavior));
        if (const auto* ind = std::get_if<IndependentParams>(&store.behavior)) {
            line["hazard"] = ind->hazard;
            line["max_move"] = ind->max_move;
        } else if (const auto* resp = std::get_if<ListResponderParams>(&store.behavior)) {
            line["lag_weights"] = resp->lag_weights;
            line["on_list_discount"] = resp->on_list_discount;
            line["off_list_markup"] = resp->off_list_markup;
        } else {
            const auto& fol = std::get<FollowerParams>(store.behavior);
            line["target"] = fol.target;
            line["follow_probability"] = fol.follow_probability;
            line["lag_weights"] = fol.lag_weights;
        }
        emit(line);
    }
    for (const auto& item : truth.items) {
        ordered_json line;
        line["record"] = "item";
        line["item_id"] = item.item_id;
        line["category"] = std::string(to_string(item.category));
        line["list_price_cents"] = item.list_price_cents;
        emit(line);
    }
    for (const auto& record : truth.categories.records()) {
        for (const auto& interval : record.intervals) {
            ordered_json line;
            line["record"] = "listing";
            line["item_id"] = record.item_id;
            line["list_name"] = interval.list_name;
            line["start_date"] = interval.start.to_string();
            line["end_date"] = interval.end.to_string();
            emit(line);
        }
    }
    return out;
}

namespace {

const json& need(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) throw Error("sim config: " + path + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw Error("sim config: missing field " + path + "." + key);
    return *it;
}

std::string need_string(const json& obj, const char* key, const std::string& path) {
    const json& v = need(obj, key, path);
    if (!v.is_string()) throw Error("sim config: " + path + "." + key + ": expected a string");
    return v.get<std::string>();
}

std::int64_t need_int(const json& obj, const char* key, const std::string& path) {
    const json& v = need(obj, key, path);
    if (!v.is_number_integer()) {
        throw Error("sim config: " + path + "." + key + ": expected an integer");
    }
    return v.get<std::int64_t>();
}

double need_number(const json& obj, const char* key, const std::string& path) {
    const json& v = need(obj, key, path);
    if (!v.is_number()) throw Error("sim config: " + path + "." + key + ": expected a number");
    return v.get<double>();
}

std::vector<double> need_weights(const json& obj, const char* key, const std::string& path) {
    const json& v = need(obj, key, path);
    if (!v.is_array()) throw Error("sim config: " + path + "." + key + ": expected an array");
    std::vector<double> weights;
    for (const auto& w : v) {
        if (!w.is_number()) {
            throw Error("sim config: " + path + "." + key + ": expected numeric weights");
        }
        weights.push_back(w.get<double>());
    }
    return weights;
}

CategoryLabel need_label(const std::string& key, const std::string& path) {
    auto label = parse_category_label(key);
    if (!label) throw Error("sim config: " + path + "." + key + ": unknown category");
    return *label;
}

}  // namespace

SimConfig sim_config_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("sim config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error("sim config: top level must be an object");

    SimConfig config;
    config.start_date = Date::parse(need_string(doc, "start_date", "$"));
    config.horizon_days = static_cast<int>(need_int(doc, "horizon_days", "$"));

    const json& price = need(doc, "list_price_cents", "$");
    config.list_price_min_cents = need_int(price, "min", "$.list_price_cents");
    config.list_price_max_cents = need_int(price, "max", "$.list_price_cents");

    if (doc.contains("missingness")) config.missingness = need_number(doc, "missingness", "$");

    const json& items = need(doc, "items", "$");
    if (!items.is_object()) throw Error("sim config: $.items: expected an object");
    for (const auto& [key, value] : items.items()) {
        const CategoryLabel label = need_label(key, "$.items");
        if (!value.is_number_integer()) {
            throw Error("sim config: $.items." + key + ": expected an integer");
        }
        config.item_counts[label] = value.get<int>();
    }

    if (doc.contains("lists")) {
        const json& lists = doc["lists"];
        if (!lists.is_object()) throw Error("sim config: $.lists: expected an object");
        for (const auto& [key, value] : lists.items()) {
            const CategoryLabel label = need_label(key, "$.lists");
            ListParams params;
            params.size = static_cast<int>(need_int(value, "size", "$.lists." + key));
            params.turnover = need_number(value, "turnover", "$.lists." + key);
            config.lists[label] = params;
        }
    }

    const json& stores = need(doc, "stores", "$");
    if (!stores.is_array()) throw Error("sim config: $.stores: expected an array");
    for (std::size_t i = 0; i < stores.size(); ++i) {
        const json& entry = stores[i];
        const std::string path = "$.stores[" + std::to_string(i) + "]";
        StoreSpec spec;
        spec.store_id = need_string(entry, "store_id", path);
        const std::string kind = need_string(entry, "behavior", path);
        if (kind == "independent") {
            IndependentParams params;
            params.hazard = need_number(entry, "hazard", path);
            params.max_move = need_number(entry, "max_move", path);
            spec.behavior = params;
        } else if (kind == "list_responder") {
            ListResponderParams params;
            params.lag_weights = need_weights(entry, "lag_weights", path);
            params.on_list_discount = need_number(entry, "on_list_discount", path);
            params.off_list_markup = need_number(entry, "off_list_markup", path);
            spec.behavior = params;
        } else if (kind == "follower") {
            FollowerParams params;
            params.target = need_string(entry, "target", path);
            params.follow_probability = need_number(entry, "follow_probability", path);
            params.lag_weights = need_weights(entry, "lag_weights", path);
            spec.behavior = params;
        } else {
            throw Error("sim config: " + path + ".behavior: unknown kind " + kind);
        }
        config.stores.push_back(std::move(spec));
    }
    return config;
}

std::string sim_config_to_json(const SimConfig& config) {
    ordered_json doc;
    doc["start_date"] = config.start_date.to_string();
    doc["horizon_days"] = config.horizon_days;
    doc["list_price_cents"] = {{"min", config.list_price_min_cents},
                               {"max", config.list_price_max_cents}};
    doc["missingness"] = config.missingness;
    ordered_json items = ordered_json::object();
    for (const auto& [label, count] : config.item_counts) {
        items[std::string(to_string(label))] = count;
    }
    doc["items"] = std::move(items);
    if (!config.lists.empty()) {
        ordered_json lists = ordered_json::object();
        for (const auto& [label, params] : config.lists) {
            lists[std::string(to_string(label))] = {{"size", params.size},
                                                    {"turnover", params.turnover}};
        }
        doc["lists"] = std::move(lists);
    }
    ordered_json stores = ordered_json::array();
    for (const auto& store : config.stores) {
        ordered_json entry;
        entry["store_id"] = store.store_id;
        entry["behavior"] = std::string(behavior_kind(store.behavior));
        if (const auto* ind = std::get_if<IndependentParams>(&store.behavior)) {
            entry["hazard"] = ind->hazard;
            entry["max_move"] = ind->max_move;
        } else if (const auto* resp = std::get_if<ListResponderParams>(&store.behavior)) {
            entry["lag_weights"] = resp->lag_weights;
            entry["on_list_discount"] = resp->on_list_discount;
            entry["off_list_markup"] = resp->off_list_markup;
        } else {
            const auto& fol = std::get<FollowerParams>(store.behavior);
            entry["target"] = fol.target;
            entry["follow_probability"] = fol.follow_probability;
            entry["lag_weights"] = fol.lag_weights;
        }
        stores.push_back(std::move(entry));
    }
    doc["stores"] = std::move(stores);
    return doc.dump(2) + "\n";
}

}  // namespace lockstep::synth
