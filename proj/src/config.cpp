#include "gravwell/config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

namespace gravwell {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
    }
}

template <typename T>
T get_as(const json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(fmt::format("config key '{}' has the wrong type", key));
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) return base / path;
    return path;
}

BackendSettings backend_from_json(const json& obj, const std::string& where, bool is_scorer) {
    std::set<std::string> allowed{"backend", "base_url", "model", "max_in_flight", "max_retries",
                                  "backoff_s", "timeout_s"};
    if (is_scorer) {
        allowed.insert("temperature");
    } else {
        allowed.insert("dim");
    }
    reject_unknown(obj, allowed, where);

    BackendSettings s;
    if (obj.contains("backend")) s.backend = get_as<std::string>(obj["backend"], where + ".backend");
    if (obj.contains("base_url")) s.base_url = get_as<std::string>(obj["base_url"], where + ".base_url");
    if (obj.contains("model")) s.model = get_as<std::string>(obj["model"], where + ".model");
    if (obj.contains("max_in_flight")) {
        const auto v = get_as<std::int64_t>(obj["max_in_flight"], where + ".max_in_flight");
        if (v < 1) throw ConfigError(where + ".max_in_flight must be >= 1");
        s.max_in_flight = static_cast<std::size_t>(v);
    }
    if (obj.contains("max_retries")) s.max_retries = get_as<int>(obj["max_retries"], where + ".max_retries");
    if (obj.contains("backoff_s")) s.backoff_s = get_as<double>(obj["backoff_s"], where + ".backoff_s");
    if (obj.contains("timeout_s")) s.timeout_s = get_as<double>(obj["timeout_s"], where + ".timeout_s");
    if (obj.contains("temperature") && !obj["temperature"].is_null()) {
        s.temperature = get_as<double>(obj["temperature"], where + ".temperature");
    }
    if (obj.contains("dim")) {
        const auto v = get_as<std::int64_t>(obj["dim"], where + ".dim");
        if (v < 1) throw ConfigError(where + ".dim must be >= 1");
        s.dim = static_cast<std::size_t>(v);
    }
    return s;
}

void validate_backend(const BackendSettings& s, const std::string& where) {
    if (s.backend != "mock" && s.backend != "remote") {
        throw ConfigError(fmt::format("{}.backend must be 'mock' or 'remote'", where));
    }
    if (s.backend == "remote" && s.model.empty()) throw ConfigError(where + ".model is required for remote");
    if (s.max_in_flight < 1) throw ConfigError(where + ".max_in_flight must be >= 1");
    if (s.max_retries < 0) throw ConfigError(where + ".max_retries must be >= 0");
    if (s.backoff_s < 0) throw ConfigError(where + ".backoff_s must be >= 0");
    if (!(s.timeout_s > 0)) throw ConfigError(where + ".timeout_s must be > 0");
    if (s.dim < 1) throw ConfigError(where + ".dim must be >= 1");
}

std::map<std::string, double> modifier_map(const json& v, const std::string& key) {
    if (!v.is_object()) throw ConfigError(key + " must map subreddit names to numbers");
    std::map<std::string, double> out;
    for (const auto& [name, val] : v.items()) out[name] = get_as<double>(val, key + "." + name);
    return out;
}

} // namespace

double AnalysisConfig::tm_for(const std::string& subreddit) const {
    auto it = tm_overrides.find(subreddit);
    return it == tm_overrides.end() ? tm : it->second;
}

double AnalysisConfig::tsm_for(const std::string& subreddit) const {
    auto it = tsm_overrides.find(subreddit);
    return it == tsm_overrides.end() ? tsm : it->second;
}

AnalysisConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    reject_unknown(doc,
                   {"inputs", "subreddits", "scorer", "embedder", "score_cache", "embedding_cache", "tm",
                    "tsm", "tm_overrides", "tsm_overrides", "top_k", "max_ancestors", "pair_cap", "seed",
                    "exit_direction", "out_dir", "threads"},
                   "config");
    AnalysisConfig c;
    if (doc.contains("inputs")) {
        for (const auto& p : get_as<std::vector<std::string>>(doc["inputs"], "inputs")) {
            c.inputs.push_back(resolve(base_dir, p));
        }
    }
    if (doc.contains("subreddits")) c.subreddits = get_as<std::vector<std::string>>(doc["subreddits"], "subreddits");
    if (doc.contains("scorer")) c.scorer = backend_from_json(doc["scorer"], "scorer", true);
    if (doc.contains("embedder")) c.embedder = backend_from_json(doc["embedder"], "embedder", false);
    if (doc.contains("score_cache") && !doc["score_cache"].is_null()) {
        c.score_cache = resolve(base_dir, get_as<std::string>(doc["score_cache"], "score_cache"));
    }
    if (doc.contains("embedding_cache") && !doc["embedding_cache"].is_null()) {
        c.embedding_cache = resolve(base_dir, get_as<std::string>(doc["embedding_cache"], "embedding_cache"));
    }
    if (doc.contains("tm")) c.tm = get_as<double>(doc["tm"], "tm");
    if (doc.contains("tsm")) c.tsm = get_as<double>(doc["tsm"], "tsm");
    if (doc.contains("tm_overrides")) c.tm_overrides = modifier_map(doc["tm_overrides"], "tm_overrides");
    if (doc.contains("tsm_overrides")) c.tsm_overrides = modifier_map(doc["tsm_overrides"], "tsm_overrides");
    if (doc.contains("top_k")) c.top_k = get_as<int>(doc["top_k"], "top_k");
    if (doc.contains("max_ancestors")) c.max_ancestors = get_as<int>(doc["max_ancestors"], "max_ancestors");
    if (doc.contains("pair_cap") && !doc["pair_cap"].is_null()) {
        const auto cap = get_as<std::int64_t>(doc["pair_cap"], "pair_cap");
        if (cap < 1) throw ConfigError("pair_cap must be >= 1 or null");
        c.pair_cap = static_cast<std::size_t>(cap);
    }
    if (doc.contains("seed")) c.seed = get_as<std::uint64_t>(doc["seed"], "seed");
    if (doc.contains("exit_direction")) {
        c.exit_direction = parse_exit_direction(get_as<std::string>(doc["exit_direction"], "exit_direction"));
    }
    if (doc.contains("out_dir")) c.out_dir = resolve(base_dir, get_as<std::string>(doc["out_dir"], "out_dir"));
    if (doc.contains("threads")) c.threads = get_as<int>(doc["threads"], "threads");
    validate(c);
    return c;
}

AnalysisConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config file is not valid JSON: " + path.string());
    return config_from_json(doc, path.parent_path());
}

void validate(const AnalysisConfig& c) {
    validate_backend(c.scorer, "scorer");
    validate_backend(c.embedder, "embedder");
    auto positive = [](double v, const std::string& name) {
        if (!(v > 0.0)) throw ConfigError(fmt::format("{} must be > 0, got {}", name, v));
    };
    positive(c.tm, "tm");
    positive(c.tsm, "tsm");
    for (const auto& [k, v] : c.tm_overrides) positive(v, "tm_overrides." + k);
    for (const auto& [k, v] : c.tsm_overrides) positive(v, "tsm_overrides." + k);
    if (c.top_k < 1) throw ConfigError("top_k must be >= 1");
    if (c.max_ancestors < 0) throw ConfigError("max_ancestors must be >= 0");
    if (c.pair_cap && *c.pair_cap < 1) throw ConfigError("pair_cap must be >= 1");
    if (c.threads < 0) throw ConfigError("threads must be >= 0");
}

nlohmann::json to_json(const AnalysisConfig& c) {
    auto backend = [](const BackendSettings& s, bool is_scorer) {
        json j{{"backend", s.backend},           {"base_url", s.base_url},   {"model", s.model},
               {"max_in_flight", s.max_in_flight}, {"max_retries", s.max_retries}, {"backoff_s", s.backoff_s},
               {"timeout_s", s.timeout_s}};
        if (is_scorer) {
            j["temperature"] = s.temperature ? json(*s.temperature) : json(nullptr);
        } else {
            j["dim"] = s.dim;
        }
        return j;
    };
    json j;
    j["inputs"] = json::array();
    for (const auto& p : c.inputs) j["inputs"].push_back(p.string());
    j["subreddits"] = c.subreddits;
    j["scorer"] = backend(c.scorer, true);
    j["embedder"] = backend(c.embedder, false);
    j["score_cache"] = c.score_cache ? json(c.score_cache->string()) : json(nullptr);
    j["embedding_cache"] = c.embedding_cache ? json(c.embedding_cache->string()) : json(nullptr);
    j["tm"] = c.tm;
    j["tsm"] = c.tsm;
    j["tm_overrides"] = c.tm_overrides;
    j["tsm_overrides"] = c.tsm_overrides;
    j["top_k"] = c.top_k;
    j["max_ancestors"] = c.max_ancestors;
    j["pair_cap"] = c.pair_cap ? json(*c.pair_cap) : json(nullptr);
    j["seed"] = c.seed;
    j["exit_direction"] = to_string(c.exit_direction);
    j["out_dir"] = c.out_dir.string();
    j["threads"] = c.threads;
    return j;
}

} // namespace gravwell
