#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gravwell/gravity.hpp"
#include "gravwell/ingest.hpp"

namespace gravwell {

struct BackendSettings {
    std::string backend = "mock"; // mock | remote
    std::string base_url = "https://api.openai.com/v1";
    std::string model;
    std::size_t max_in_flight = 4;
    int max_retries = 3;
    double backoff_s = 0.5;
    double timeout_s = 120.0;
    std::optional<double> temperature; // scorer only
    std::size_t dim = kMockEmbeddingDim; // mock embedder only
};

struct AnalysisConfig {
    std::vector<std::filesystem::path> inputs;
    std::vector<std::string> subreddits; // empty: every subreddit in the corpus
    BackendSettings scorer;
    BackendSettings embedder;
    std::optional<std::filesystem::path> score_cache;
    std::optional<std::filesystem::path> embedding_cache;
    double tm = 1.0;
    double tsm = 1.0;
    std::map<std::string, double> tm_overrides;
    std::map<std::string, double> tsm_overrides;
    int top_k = kDefaultTopK;
    int max_ancestors = kDefaultMaxAncestors;
    std::optional<std::size_t> pair_cap;
    std::uint64_t seed = 0;
    ExitDirection exit_direction = ExitDirection::WeakestFirst;
    std::filesystem::path out_dir = "out";
    int threads = 0; // OpenMP threads, 0 = runtime default

    double tm_for(const std::string& subreddit) const;
    double tsm_for(const std::string& subreddit) const;
};

// Parses and validates a config document. Unknown keys, wrong types and
// out-of-domain values raise ConfigError. Relative paths are resolved
// against `base_dir`.
AnalysisConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
AnalysisConfig load_config(const std::filesystem::path& path);

// Throws ConfigError if any setting is out of its domain.
void validate(const AnalysisConfig& config);

nlohmann::json to_json(const AnalysisConfig& config);

} // namespace gravwell
