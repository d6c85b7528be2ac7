#include "lockstep/clusters.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "lockstep/error.hpp"

namespace lockstep {

namespace {

Cluster finish_cluster(const ItemId& item, Window window, std::vector<PriceChange> changes) {
    Cluster cluster;
    cluster.item_id = item;
    cluster.window = window;
    cluster.first_date = changes.front().date;
    cluster.last_date = changes.back().date;
    std::set<StoreId> stores;
    for (const auto& c : changes) stores.insert(c.store_id);
    cluster.distinct_stores.assign(stores.begin(), stores.end());
    cluster.changes = std::move(changes);
    return cluster;
}

}  // namespace

std::vector<Cluster> segment_clusters(std::span<const PriceChange> item_changes, Window window) {
    if (window.days < 1) throw Error("cluster window must be at least 1 day");
    std::vector<Cluster> clusters;
    if (item_changes.empty()) return clusters;

    const ItemId& item = item_changes.front().item_id;
    for (std::size_t i = 1; i < item_changes.size(); ++i) {
        if (item_changes[i].item_id != item) {
            throw Error("segment_clusters: changes span more than one item");
        }
        if (item_changes[i].date < item_changes[i - 1].date) {
            throw Error("segment_clusters: changes not sorted by date");
        }
    }

    std::vector<PriceChange> current;
    for (const auto& change : item_changes) {
        if (!current.empty() && change.date - current.back().date > window.days) {
            clusters.push_back(finish_cluster(item, window, std::move(current)));
            current.clear();
        }
        current.push_back(change);
    }
    clusters.push_back(finish_cluster(item, window, std::move(current)));
    return clusters;
}

std::vector<Cluster> segment_all_items(const ChangeLog& log, Window window) {
    std::vector<Cluster> clusters;
    for (const auto& item : log.items()) {
        auto item_clusters = segment_clusters(log.for_item(item), window);
        clusters.insert(clusters.end(), std::make_move_iterator(item_clusters.begin()),
                        std::make_move_iterator(item_clusters.end()));
    }
    return clusters;
}

ClusterStats cluster_summary(std::span<const Cluster> clusters) {
    ClusterStats stats;
    stats.total_clusters = static_cast<std::int64_t>(clusters.size());
    if (clusters.empty()) return stats;

    double length_sum = 0.0;
    double change_sum = 0.0;
    for (const auto& cluster : clusters) {
        length_sum += cluster.length_days();
        change_sum += static_cast<double>(cluster.changes.size());
    }
    stats.avg_length_days = length_sum / static_cast<double>(clusters.size());
    stats.avg_changes_per_cluster = change_sum / static_cast<double>(clusters.size());
    return stats;
}

int StoreCountHistogram::bucket_index(std::size_t distinct_stores) {
    if (distinct_stores < 1) throw Error("cluster with no stores");
    if (distinct_stores > 5) return 5;
    return static_cast<int>(distinct_stores) - 1;
}

std::string_view StoreCountHistogram::bucket_name(int index) {
    static constexpr std::string_view names[kBucketCount] = {"1", "2", "3", "4", "5", ">5"};
    return names[index];
}

StoreCountHistogram store_count_histogram(std::span<const Cluster> clusters) {
    StoreCountHistogram hist;
    for (const auto& cluster : clusters) {
        auto& bucket = hist.buckets[static_cast<std::size_t>(
            StoreCountHistogram::bucket_index(cluster.distinct_stores.size()))];
        for (const auto& change : cluster.changes) {
            bucket.total_changes += 1;
            if (change.direction() == Direction::up) {
                bucket.changes_up += 1;
            } else {
                bucket.changes_down += 1;
            }
        }
    }
    return hist;
}

std::string clusters_to_jsonl(std::span<const Cluster> clusters) {
    std::string out;
    for (const auto& cluster : clusters) {
        nlohmann::ordered_json line;
        line["item_id"] = cluster.item_id;
        line["window_days"] = cluster.window.days;
        line["first_date"] = cluster.first_date.to_string();
        line["last_date"] = cluster.last_date.to_string();
        line["stores"] = cluster.distinct_stores;
        nlohmann::ordered_json changes = nlohmann::ordered_json::array();
        for (const auto& c : cluster.changes) {
            nlohmann::ordered_json rec;
            rec["store_id"] = c.store_id;
            rec["date"] = c.date.to_string();
            rec["prev_date"] = c.prev_date.to_string();
            rec["prev_price_cents"] = c.prev_price;
            rec["new_price_cents"] = c.new_price;
            rec["direction"] = std::string(to_string(c.direction()));
            changes.push_back(std::move(rec));
        }
        line["changes"] = std::move(changes);
        out += line.dump();
        out.push_back('\n');
    }
    return out;
}

}  // namespace lockstep
