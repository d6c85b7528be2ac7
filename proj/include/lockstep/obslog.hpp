#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lockstep/panel.hpp"

namespace lockstep {

// Exclusive (or shared, for readers) advisory lock on a log directory.
// Throws if another process holds a conflicting lock: concurrent writers are
// a clean error, not a queue.
class ScopedLock {
public:
    ScopedLock(const std::filesystem::path& lock_file, bool exclusive);
    ~ScopedLock();

    ScopedLock(const ScopedLock&) = delete;
    ScopedLock& operator=(const ScopedLock&) = delete;

private:
    int fd_ = -1;
};

struct SegmentEntry {
    std::string segment;  // relative path, e.g. "segments/seg-000001.csv"
    std::string source;
    std::string captured_at;  // UTC, e.g. "2026-08-19T12:00:00Z"
    std::int64_t observations = 0;
    std::string digest;  // content hash of the segment bytes
};

// Append-only store of observation CSV segments under one directory:
//   <dir>/manifest.jsonl   one line per segment, in append order
//   <dir>/segments/seg-NNNNNN.csv
//   <dir>/.lock            advisory lock file
// Segments are immutable once written; replaying the whole log reproduces
// the same panel every time.
class ObservationLog {
public:
    // Creates the directory layout if missing.
    static ObservationLog open(const std::filesystem::path& dir);

    const std::filesystem::path& dir() const { return dir_; }
    std::vector<SegmentEntry> entries() const;

    // Validates the new observations alone and merged with the existing log
    // (so an append can never make the log unreplayable), then writes the
    // segment and manifest line. Returns the manifest entry written.
    SegmentEntry append(const std::string& observation_csv, const std::string& source);

    // Reads every segment, verifies digests, and merges into one panel.
    // Exact duplicate observations across segments collapse; conflicting
    // ones were rejected at append time and fail here too.
    PricePanel replay() const;

private:
    std::filesystem::path dir_;
};

// UTC timestamp for manifest entries; overridable for tests via the
// LOCKSTEP_CAPTURE_TIME environment variable.
std::string capture_timestamp();

}  // namespace lockstep
