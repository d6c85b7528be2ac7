#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lockstep/obslog.hpp"
#include "lockstep/panel.hpp"

namespace lockstep {

// One snapshot source. The endpoint scheme picks the transport:
//   file:<glob>        read every matching local file
//   http://host/path   GET the document once
// `schedule` is informational; cadence is the host scheduler's job.
struct SourceDef {
    std::string name;
    std::string endpoint;
    std::string parser;  // registry id
    std::string schedule;
};

// Turns one fetched payload into observations; throws Error (with a payload
// excerpt) on malformed input.
using ObservationParser = std::function<std::vector<PriceObservation>(const std::string&)>;

class ParserRegistry {
public:
    // Registry preloaded with the built-in parsers:
    //   observation_csv   the panel module's observation CSV
    //   price_list_json   {"store_id","date","prices":[{"item_id","price_cents"}]}
    static ParserRegistry with_builtins();

    void add(const std::string& id, ObservationParser parser);
    bool has(const std::string& id) const;
    const ObservationParser& get(const std::string& id) const;
    std::vector<std::string> ids() const;

private:
    std::map<std::string, ObservationParser> parsers_;
};

struct SourceOutcome {
    std::string source;
    bool ok = false;
    std::string segment;            // manifest path when ok
    std::int64_t observations = 0;  // appended when ok
    std::string error;              // reason when not ok
};

struct CollectResult {
    std::vector<SourceOutcome> outcomes;

    bool any_failed() const;
};

// Fetches each source once, parses, and appends one log segment per source
// that yields observations. A source that cannot be fetched or parsed is
// skipped and reported; the others still land. Misconfiguration (unknown
// parser id, unsupported scheme, no sources) throws instead.
CollectResult collect_once(ObservationLog& log, const std::vector<SourceDef>& sources,
                           const ParserRegistry& registry);

}  // namespace lockstep
