#pragma once

// Support / alignment scoring: prompt construction, model-output parsing,
// scorer backends and the persistent score cache.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gravwell/jsonl_store.hpp"
#include "gravwell/types.hpp"

namespace gravwell {

struct Prompt {
    ScoreKind kind = ScoreKind::Support;
    std::string system;
    std::string user;

    // kind tag + system + user; the only input to cache keys and the mock.
    std::string canonical() const;
    std::string cache_key() const; // sha256 hex of canonical()
};

struct ScoreRequest {
    ScoreKind kind = ScoreKind::Support;
    CommentContext primary;
    std::optional<CommentContext> secondary; // present iff Alignment

    static ScoreRequest support(CommentContext ctx);
    static ScoreRequest alignment(CommentContext first, CommentContext second);

    // Throws DomainError if the context count does not match the kind.
    Prompt prompt() const;
};

const std::string& support_system_prompt();
const std::string& alignment_system_prompt();

Prompt build_support_prompt(const CommentContext& ctx);
Prompt build_alignment_prompt(const CommentContext& first, const CommentContext& second);

// Nearest level to `x`; ties go toward zero; values beyond +-1 saturate.
ScoreLevel snap_to_level(double x);

// First numeric token of `text`, snapped onto the level grid. Throws a
// retryable ScoringError carrying the raw text when no number is present.
ScoreLevel parse_model_output(const std::string& text);

// Deterministic stand-in scorer: sha256(canonical) mod 5.
ScoreLevel mock_score(const Prompt& prompt);
ScoreLevel mock_score(const ScoreRequest& request);

class ScorerBackend {
public:
    virtual ~ScorerBackend() = default;
    virtual std::string model_id() const = 0;
    // Raw model text. Throws ScoringError (retryable or not).
    virtual std::string complete(const Prompt& prompt) = 0;
};

class MockScorer final : public ScorerBackend {
public:
    std::string model_id() const override { return "mock-scorer-v1"; }
    std::string complete(const Prompt& prompt) override;
    std::size_t calls() const noexcept { return calls_.load(); }

private:
    std::atomic<std::size_t> calls_{0};
};

struct CacheEntry {
    std::string key;
    ScoreLevel value;
    std::string model_id;
    std::int64_t created_utc = 0;
};

class ScoreCache {
public:
    ScoreCache() = default; // memory only
    explicit ScoreCache(std::filesystem::path path) : store_(std::move(path)) {}

    std::optional<ScoreLevel> lookup(const std::string& key) const;
    std::optional<CacheEntry> entry(const std::string& key) const;
    void store(const CacheEntry& e);
    std::size_t size() const { return store_.size(); }

private:
    JsonlStore store_;
};

struct RetryPolicy {
    int max_retries = 3;
    double base_delay_s = 0.5; // doubled per attempt
    double max_delay_s = 30.0;
    std::size_t max_in_flight = 4;
};

// Cache-first scoring of one prompt. Throws ScoringError once retries are
// exhausted or on a non-retryable backend failure.
ScoreLevel score(const Prompt& prompt, ScorerBackend& backend, ScoreCache& cache,
                 const RetryPolicy& policy);
ScoreLevel score(const ScoreRequest& request, ScorerBackend& backend, ScoreCache& cache,
                 const RetryPolicy& policy);

struct BatchOutcome {
    std::vector<std::optional<ScoreLevel>> levels; // nullopt = failed
    std::vector<std::string> errors;               // per index, empty on success
    std::size_t backend_calls = 0;
    std::size_t cache_hits = 0;

    std::size_t failures() const;
};

// Scores `count` prompts produced on demand by `make_prompt`. Identical
// prompts are resolved once; at most policy.max_in_flight backend calls run
// concurrently. Results do not depend on scheduling.
BatchOutcome score_batch(std::size_t count, const std::function<Prompt(std::size_t)>& make_prompt,
                         ScorerBackend& backend, ScoreCache& cache, const RetryPolicy& policy);

} // namespace gravwell
