#pragma once

#include <optional>
#include <span>
#include <string>

#include "lockstep/panel.hpp"

namespace lockstep {

// n-day clustering window.
struct Window {
    int days = 3;

    friend constexpr bool operator==(Window a, Window b) { return a.days == b.days; }
};

// Maximal run of one item's pooled cross-store changes with inter-change
// gaps of at most `window.days` calendar days. Same-day changes by multiple
// stores have gap 0 and always share a cluster.
struct Cluster {
    ItemId item_id;
    Window window;
    std::vector<PriceChange> changes;      // sorted by (date, store_id)
    Date first_date;
    Date last_date;
    std::vector<StoreId> distinct_stores;  // sorted, unique

    int length_days() const { return (last_date - first_date) + 1; }
};

// Pre: changes all share one item_id and are sorted by date. A new cluster
// starts exactly when the gap to the previous change date exceeds the window.
std::vector<Cluster> segment_clusters(std::span<const PriceChange> item_changes, Window window);

// Every item in the log, clusters ordered by (item_id, first_date).
std::vector<Cluster> segment_all_items(const ChangeLog& log, Window window);

struct ClusterStats {
    std::int64_t total_clusters = 0;
    // Undefined (absent) when there are no clusters, never reported as zero.
    std::optional<double> avg_length_days;
    std::optional<double> avg_changes_per_cluster;
};

ClusterStats cluster_summary(std::span<const Cluster> clusters);

struct DirectionTally {
    std::int64_t total_changes = 0;
    std::int64_t changes_up = 0;
    std::int64_t changes_down = 0;
};

// Buckets keyed by the number of distinct stores in a cluster: 1-5 exact,
// everything above pooled into ">5".
struct StoreCountHistogram {
    static constexpr int kBucketCount = 6;
    std::array<DirectionTally, kBucketCount> buckets{};

    static int bucket_index(std::size_t distinct_stores);
    static std::string_view bucket_name(int index);
};

StoreCountHistogram store_count_histogram(std::span<const Cluster> clusters);

// One cluster per line, stable field ordering.
std::string clusters_to_jsonl(std::span<const Cluster> clusters);

}  // namespace lockstep
