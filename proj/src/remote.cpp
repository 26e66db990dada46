#include "gravwell/remote.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <regex>

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

namespace gravwell {

namespace {

using nlohmann::json;

struct SplitUrl {
    std::string origin; // scheme://host[:port]
    std::string prefix; // path without trailing slash
};

SplitUrl split_url(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw ConfigError("malformed base_url: " + url);
    SplitUrl s{m[1].str(), m[2].matched ? m[2].str() : std::string{}};
    while (!s.prefix.empty() && s.prefix.back() == '/') s.prefix.pop_back();
    return s;
}

double retry_after(const httplib::Result& res) {
    if (!res || !res->has_header("Retry-After")) return 0.0;
    try {
        return std::stod(res->get_header_value("Retry-After"));
    } catch (const std::exception&) {
        return 0.0;
    }
}

// Posts JSON and returns the parsed body; HTTP failures become ScoringErrors.
json post_json(const RemoteEndpoint& ep, const std::string& origin, const std::string& path,
               const json& body) {
    httplib::Client cli(origin);
    const auto secs = static_cast<time_t>(ep.timeout_s);
    cli.set_connection_timeout(secs, 0);
    cli.set_read_timeout(secs, 0);
    cli.set_write_timeout(secs, 0);
    httplib::Headers headers{{"Authorization", "Bearer " + ep.api_key}};

    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw ScoringError(fmt::format("request to {}{} failed: {}", origin, path,
                                       httplib::to_string(res.error())),
                           /*retryable=*/true);
    }
    const int status = res->status;
    if (status == 429 || status >= 500) {
        throw ScoringError(fmt::format("backend returned HTTP {}", status), true, res->body, retry_after(res));
    }
    if (status < 200 || status >= 300) {
        throw ScoringError(fmt::format("backend returned HTTP {}", status), false, res->body);
    }
    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) throw ScoringError("backend returned invalid JSON", true, res->body);
    return parsed;
}

} // namespace

std::string api_key_from_env() {
    const char* v = std::getenv(kApiKeyEnv);
    if (!v || !*v) throw ConfigError(fmt::format("remote backend requires the {} environment variable", kApiKeyEnv));
    return v;
}

RemoteScorer::RemoteScorer(RemoteEndpoint endpoint, std::optional<double> temperature)
    : endpoint_(std::move(endpoint)), temperature_(temperature) {
    if (endpoint_.api_key.empty()) throw ConfigError("remote scorer: missing API key");
    if (endpoint_.model.empty()) throw ConfigError("remote scorer: missing model id");
    auto s = split_url(endpoint_.base_url);
    origin_ = s.origin;
    path_ = s.prefix + "/chat/completions";
}

std::string RemoteScorer::complete(const Prompt& prompt) {
    json body;
    body["model"] = endpoint_.model;
    body["messages"] = json::array({
        json{{"role", "system"}, {"content", prompt.system}},
        json{{"role", "user"}, {"content", prompt.user}},
    });
    if (temperature_) body["temperature"] = *temperature_;

    const json res = post_json(endpoint_, origin_, path_, body);
    try {
        return res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw ScoringError("chat completion response has no message content", true, res.dump());
    }
}

RemoteEmbedder::RemoteEmbedder(RemoteEndpoint endpoint, int max_retries, double backoff_s)
    : endpoint_(std::move(endpoint)), max_retries_(max_retries), backoff_s_(backoff_s) {
    if (endpoint_.api_key.empty()) throw ConfigError("remote embedder: missing API key");
    if (endpoint_.model.empty()) throw ConfigError("remote embedder: missing model id");
    auto s = split_url(endpoint_.base_url);
    origin_ = s.origin;
    path_ = s.prefix + "/embeddings";
}

EmbeddingVector RemoteEmbedder::embed(const std::string& text) {
    json body{{"model", endpoint_.model}, {"input", text}};
    json res;
    for (int attempt = 0;; ++attempt) {
        try {
            res = post_json(endpoint_, origin_, path_, body);
            break;
        } catch (const ScoringError& e) {
            if (!e.retryable() || attempt >= max_retries_) throw;
            const double delay = std::max(e.retry_after_s(), std::min(30.0, backoff_s_ * std::ldexp(1.0, attempt)));
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
    }
    try {
        return EmbeddingVector{res.at("data").at(0).at("embedding").get<std::vector<double>>()};
    } catch (const json::exception&) {
        throw AnalysisError("embedding response has no data[0].embedding");
    }
}

} // namespace gravwell
