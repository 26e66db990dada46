#pragma once

// HTTP backends for chat-completion scoring and text embeddings
// (OpenAI-compatible wire format).

#include <optional>
#include <string>

#include "gravwell/gravity.hpp"
#include "gravwell/scoring.hpp"

namespace gravwell {

inline constexpr const char* kApiKeyEnv = "GRAVWELL_API_KEY";

struct RemoteEndpoint {
    std::string base_url = "https://api.openai.com/v1"; // scheme://host[:port][/prefix]
    std::string model;
    std::string api_key;
    double timeout_s = 120.0;
};

// Reads GRAVWELL_API_KEY; throws ConfigError when it is unset or empty.
std::string api_key_from_env();

// Chat-completions scorer: POST {prefix}/chat/completions with a system and a
// user message; the first choice's message content is the model output.
class RemoteScorer final : public ScorerBackend {
public:
    // Throws ConfigError for a missing key, model or malformed URL.
    RemoteScorer(RemoteEndpoint endpoint, std::optional<double> temperature = std::nullopt);

    std::string model_id() const override { return endpoint_.model; }
    std::string complete(const Prompt& prompt) override;

private:
    RemoteEndpoint endpoint_;
    std::optional<double> temperature_;
    std::string origin_;
    std::string path_;
};

// POST {prefix}/embeddings; returns data[0].embedding. Retryable failures
// are retried with exponential backoff.
class RemoteEmbedder final : public Embedder {
public:
    explicit RemoteEmbedder(RemoteEndpoint endpoint, int max_retries = 3, double backoff_s = 0.5);

    std::string model_id() const override { return endpoint_.model; }
    EmbeddingVector embed(const std::string& text) override;

private:
    RemoteEndpoint endpoint_;
    int max_retries_;
    double backoff_s_;
    std::string origin_;
    std::string path_;
};

} // namespace gravwell
