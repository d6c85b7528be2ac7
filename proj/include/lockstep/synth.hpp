#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "lockstep/panel.hpp"
#include "lockstep/rng.hpp"

namespace lockstep::synth {

// Reprices on its own clock: each day after the first, with probability
// `hazard`, the store draws a fresh price anchored to the item's list price:
// round(list * (1 + U(-max_move, +max_move))), floored at 1 cent.
struct IndependentParams {
    double hazard = 0.0;
    double max_move = 0.0;
};

// Holds a discounted price while an item is on a bestseller list and a
// marked-up price while it is off, repricing within `lag_weights` days of
// each on/off transition. lag_weights[j] weights a lag of j days.
struct ListResponderParams {
    std::vector<double> lag_weights;
    double on_list_discount = 0.0;
    double off_list_markup = 0.0;
};

// Watches one target store and, with probability `follow_probability`, copies
// each of the target's new prices after a lag drawn from `lag_weights`.
struct FollowerParams {
    StoreId target;
    double follow_probability = 0.0;
    std::vector<double> lag_weights;
};

using StoreBehavior = std::variant<IndependentParams, ListResponderParams, FollowerParams>;

std::string_view behavior_kind(const StoreBehavior& behavior);

struct StoreSpec {
    StoreId store_id;
    StoreBehavior behavior;
};

// Weekly bestseller list: `size` slots, and each listed item is replaced at
// the top of a week with probability `turnover`.
struct ListParams {
    int size = 0;
    double turnover = 0.0;
};

struct SimConfig {
    std::vector<StoreSpec> stores;
    std::map<CategoryLabel, int> item_counts;  // absent label means zero items
    Date start_date;
    int horizon_days = 0;
    std::int64_t list_price_min_cents = 0;
    std::int64_t list_price_max_cents = 0;
    std::map<CategoryLabel, ListParams> lists;  // bestseller labels only
    double missingness = 0.0;

    int items_total() const;
};

// Throws Error naming the offending field. Lag weights are normalized in
// place so every stored lag distribution sums to 1.
void validate(SimConfig& config);

struct ItemInfo {
    ItemId item_id;
    CategoryLabel category = CategoryLabel::random;
    std::int64_t list_price_cents = 0;
};

// Everything the generator decided, for validating detectors against:
// planted behaviors, the item universe, and the bestseller calendar.
struct GroundTruth {
    std::vector<StoreSpec> stores;
    std::vector<ItemInfo> items;
    CategorySet categories;
};

struct SimResult {
    PricePanel panel;
    GroundTruth truth;
};

// Deterministic ISBN-13-shaped item ids; index is zero-based within category.
ItemId make_item_id(CategoryLabel category, int index);

// Weekly membership calendar for every configured bestseller list, emitted as
// per-item listing intervals. Deterministic per seed.
CategorySet make_bestseller_calendar(const SimConfig& config, std::uint64_t seed);

// Day-by-day generation of the full panel plus ground truth. Deterministic
// per (config, seed); random streams are split per store and per item so
// adding a store never perturbs the others.
SimResult simulate(SimConfig config, std::uint64_t seed);

// Same generator, restricted to configs with no followers: any co-movement in
// the output comes from shared list shocks, not from following.
SimResult confound_scenario(SimConfig config, std::uint64_t seed);

std::string ground_truth_to_jsonl(const GroundTruth& truth);

// Parses the documented simulation config schema (see README). Throws Error
// with the offending field path.
SimConfig sim_config_from_json(const std::string& text);
std::string sim_config_to_json(const SimConfig& config);

}  // namespace lockstep::synth
