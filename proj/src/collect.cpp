#include "lockstep/collect.hpp"

#include <glob.h>

#include <algorithm>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "lockstep/error.hpp"

namespace lockstep {

using nlohmann::json;

namespace {

constexpr std::string_view kFileScheme = "file:";
constexpr std::string_view kHttpScheme = "http://";

std::string payload_excerpt(const std::string& payload) {
    std::string excerpt = payload.substr(0, 80);
    for (char& c : excerpt) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    if (payload.size() > 80) excerpt += "...";
    return excerpt;
}

std::vector<PriceObservation> parse_price_list_json(const std::string& payload) {
    json doc;
    try {
        doc = json::parse(payload);
    } catch (const json::parse_error& e) {
        throw Error(std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error("price list must be a JSON object");
    if (!doc.contains("store_id") || !doc["store_id"].is_string()) {
        throw Error("price list missing string field store_id");
    }
    if (!doc.contains("date") || !doc["date"].is_string()) {
        throw Error("price list missing string field date");
    }
    const StoreId store = doc["store_id"].get<std::string>();
    const Date date = Date::parse(doc["date"].get<std::string>());
    if (!doc.contains("prices") || !doc["prices"].is_array()) {
        throw Error("price list missing array field prices");
    }
    std::vector<PriceObservation> observations;
    for (std::size_t i = 0; i < doc["prices"].size(); ++i) {
        const json& entry = doc["prices"][i];
        const std::string where = "prices[" + std::to_string(i) + "]";
        if (!entry.is_object() || !entry.contains("item_id") || !entry["item_id"].is_string()) {
            throw Error(where + ": missing string field item_id");
        }
        if (!entry.contains("price_cents") || !entry["price_cents"].is_number_integer()) {
            throw Error(where + ": missing integer field price_cents");
        }
        PriceObservation obs;
        obs.store_id = store;
        obs.item_id = entry["item_id"].get<std::string>();
        obs.date = date;
        obs.price_cents = entry["price_cents"].get<std::int64_t>();
        if (obs.price_cents < 0) throw Error(where + ": negative price");
        observations.push_back(std::move(obs));
    }
    return observations;
}

std::string read_file_or_die(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::vector<std::string> expand_glob(const std::string& pattern) {
    ::glob_t results{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &results);
    std::vector<std::string> paths;
    if (rc == 0) {
        for (std::size_t i = 0; i < results.gl_pathc; ++i) paths.emplace_back(results.gl_pathv[i]);
    }
    ::globfree(&results);
    if (rc != 0 && rc != GLOB_NOMATCH) throw Error("glob failed for pattern " + pattern);
    std::sort(paths.begin(), paths.end());
    return paths;
}

// Splits "http://host:port/path" into base and path for the HTTP client.
std::pair<std::string, std::string> split_http_endpoint(const std::string& endpoint) {
    const std::size_t host_start = kHttpScheme.size();
    const std::size_t slash = endpoint.find('/', host_start);
    if (slash == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

// Fetched payloads for one source, in a deterministic order.
std::vector<std::string> fetch_payloads(const SourceDef& source) {
    if (source.endpoint.rfind(kFileScheme, 0) == 0) {
        const std::string pattern = source.endpoint.substr(kFileScheme.size());
        const std::vector<std::string> paths = expand_glob(pattern);
        if (paths.empty()) throw Error("no files match " + pattern);
        std::vector<std::string> payloads;
        payloads.reserve(paths.size());
        for (const auto& path : paths) payloads.push_back(read_file_or_die(path));
        return payloads;
    }
    const auto [base, path] = split_http_endpoint(source.endpoint);
    httplib::Client client(base);
    client.set_connection_timeout(5, 0);
    client.set_read_timeout(10, 0);
    auto response = client.Get(path);
    if (!response) {
        throw Error("cannot reach " + source.endpoint + ": " + httplib::to_string(response.error()));
    }
    if (response->status != 200) {
        throw Error(source.endpoint + " returned HTTP " + std::to_string(response->status));
    }
    return {response->body};
}

}  // namespace

ParserRegistry ParserRegistry::with_builtins() {
    ParserRegistry registry;
    registry.add("observation_csv",
                 [](const std::string& payload) { return parse_observation_csv(payload); });
    registry.add("price_list_json", parse_price_list_json);
    return registry;
}

void ParserRegistry::add(const std::string& id, ObservationParser parser) {
    parsers_[id] = std::move(parser);
}

bool ParserRegistry::has(const std::string& id) const { return parsers_.count(id) > 0; }

const ObservationParser& ParserRegistry::get(const std::string& id) const {
    auto it = parsers_.find(id);
    if (it == parsers_.end()) throw Error("no parser registered under id " + id);
    return it->second;
}

std::vector<std::string> ParserRegistry::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : parsers_) out.push_back(id);
    return out;
}

bool CollectResult::any_failed() const {
    return std::any_of(outcomes.begin(), outcomes.end(),
                       [](const SourceOutcome& o) { return !o.ok; });
}

CollectResult collect_once(ObservationLog& log, const std::vector<SourceDef>& sources,
                           const ParserRegistry& registry) {
    if (sources.empty()) throw Error("no collector sources configured");
    for (const auto& source : sources) {
        if (source.name.empty()) throw Error("collector source without a name");
        if (!registry.has(source.parser)) {
            throw Error("source " + source.name + ": no parser registered under id " +
                        source.parser);
        }
        const bool file = source.endpoint.rfind(kFileScheme, 0) == 0;
        const bool http = source.endpoint.rfind(kHttpScheme, 0) == 0;
        if (!file && !http) {
            throw Error("source " + source.name + ": unsupported endpoint scheme in " +
                        source.endpoint + " (use file: or http://)");
        }
    }

    CollectResult result;
    for (const auto& source : sources) {
        SourceOutcome outcome;
        outcome.source = source.name;
        try {
            const ObservationParser& parser = registry.get(source.parser);
            std::vector<PriceObservation> observations;
            std::vector<std::string> payloads = fetch_payloads(source);
            for (const auto& payload : payloads) {
                try {
                    auto parsed = parser(payload);
                    observations.insert(observations.end(), parsed.begin(), parsed.end());
                } catch (const Error& e) {
                    throw Error(std::string("parse error: ") + e.what() + " [payload: " +
                                payload_excerpt(payload) + "]");
                }
            }
            // Canonicalize (sort + dedup + conflict check) before appending.
            const std::string csv = PricePanel::from_observations(std::move(observations)).to_csv();
            const SegmentEntry entry = log.append(csv, source.name);
            outcome.ok = true;
            outcome.segment = entry.segment;
            outcome.observations = entry.observations;
        } catch (const Error& e) {
            outcome.ok = false;
            outcome.error = e.what();
        }
        result.outcomes.push_back(std::move(outcome));
    }
    return result;
}

}  // namespace lockstep
