#include "lockstep/obslog.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>

#include <json.hpp>

#include "lockstep/error.hpp"
#include "lockstep/hash.hpp"

namespace fs = std::filesystem;

namespace lockstep {

using nlohmann::json;
using nlohmann::ordered_json;

ScopedLock::ScopedLock(const fs::path& lock_file, bool exclusive) {
    fd_ = ::open(lock_file.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("cannot open lock file " + lock_file.string());
    const int op = (exclusive ? LOCK_EX : LOCK_SH) | LOCK_NB;
    if (::flock(fd_, op) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw Error("observation log is locked by another process: " + lock_file.string());
    }
}

ScopedLock::~ScopedLock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

std::string capture_timestamp() {
    if (const char* fixed = std::getenv("LOCKSTEP_CAPTURE_TIME")) return fixed;
    const std::time_t now = std::time(nullptr);
    std::tm parts{};
    gmtime_r(&now, &parts);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &parts);
    return buf;
}

namespace {

std::string read_file_or_die(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

void write_file_or_die(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << bytes;
    out.flush();
    if (!out) throw Error("short write to " + path.string());
}

std::vector<SegmentEntry> read_manifest(const fs::path& dir) {
    std::vector<SegmentEntry> entries;
    const fs::path manifest = dir / "manifest.jsonl";
    if (!fs::exists(manifest)) return entries;
    std::ifstream in(manifest);
    if (!in) throw Error("cannot read " + manifest.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(manifest.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
        SegmentEntry entry;
        entry.segment = doc.value("segment", "");
        entry.source = doc.value("source", "");
        entry.captured_at = doc.value("captured_at", "");
        entry.observations = doc.value("observations", std::int64_t{0});
        entry.digest = doc.value("digest", "");
        if (entry.segment.empty()) {
            throw Error(manifest.string() + " line " + std::to_string(line_no) +
                        ": missing segment path");
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::vector<PriceObservation> replay_observations(const fs::path& dir) {
    std::vector<PriceObservation> all;
    for (const auto& entry : read_manifest(dir)) {
        const fs::path segment = dir / entry.segment;
        const std::string bytes = read_file_or_die(segment);
        if (!entry.digest.empty() && to_hex64(fnv1a64(bytes)) != entry.digest) {
            throw Error("segment " + entry.segment +
                        " does not match its manifest digest (log corrupted?)");
        }
        std::vector<PriceObservation> obs;
        try {
            obs = parse_observation_csv(bytes);
        } catch (const Error& e) {
            throw Error(segment.string() + ": " + e.what());
        }
        all.insert(all.end(), obs.begin(), obs.end());
    }
    return all;
}

}  // namespace

ObservationLog ObservationLog::open(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir / "segments", ec);
    if (ec) throw Error("cannot create log directory " + dir.string() + ": " + ec.message());
    ObservationLog log;
    log.dir_ = dir;
    return log;
}

std::vector<SegmentEntry> ObservationLog::entries() const { return read_manifest(dir_); }

SegmentEntry ObservationLog::append(const std::string& observation_csv,
                                    const std::string& source) {
    ScopedLock lock(dir_ / ".lock", /*exclusive=*/true);

    // Validate the new segment on its own (line-numbered errors) ...
    std::vector<PriceObservation> fresh = parse_observation_csv(observation_csv);

    // ... and merged with everything already in the log, so a bad segment is
    // rejected before it is written rather than poisoning every later replay.
    std::vector<PriceObservation> merged = replay_observations(dir_);
    merged.insert(merged.end(), fresh.begin(), fresh.end());
    PricePanel::from_observations(std::move(merged));

    const std::vector<SegmentEntry> manifest = read_manifest(dir_);
    char name[32];
    std::snprintf(name, sizeof name, "seg-%06zu.csv", manifest.size() + 1);

    SegmentEntry entry;
    entry.segment = std::string("segments/") + name;
    entry.source = source;
    entry.captured_at = capture_timestamp();
    entry.observations = static_cast<std::int64_t>(fresh.size());
    entry.digest = to_hex64(fnv1a64(observation_csv));

    write_file_or_die(dir_ / entry.segment, observation_csv);

    ordered_json line;
    line["segment"] = entry.segment;
    line["source"] = entry.source;
    line["captured_at"] = entry.captured_at;
    line["observations"] = entry.observations;
    line["digest"] = entry.digest;
    std::ofstream out(dir_ / "manifest.jsonl", std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot append to manifest in " + dir_.string());
    out << line.dump() << '\n';
    out.flush();
    if (!out) throw Error("short write to manifest in " + dir_.string());
    return entry;
}

PricePanel ObservationLog::replay() const {
    ScopedLock lock(dir_ / ".lock", /*exclusive=*/false);
    return PricePanel::from_observations(replay_observations(dir_));
}

}  // namespace lockstep
