#include "gravwell/scoring.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <regex>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "gravwell/hashing.hpp"

namespace gravwell {

namespace {

using ojson = nlohmann::ordered_json;

// The model is asked for one bare number; parse_model_output enforces it.
constexpr const char* kFormatInstruction =
    "Respond with exactly one of these numbers and nothing else: -1, -0.5, 0, 0.5, 1";

ojson context_json(const CommentContext& ctx) {
    ojson j;
    j["message"] = ctx.message.body;
    j["parent"] = ctx.parent.body;
    ojson anc = ojson::array();
    for (const auto& a : ctx.ancestors) anc.push_back(a.body);
    j["ancestors"] = std::move(anc);
    return j;
}

std::int64_t now_utc() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

} // namespace

std::string Prompt::canonical() const {
    std::string s;
    s.reserve(system.size() + user.size() + 16);
    s += to_string(kind);
    s += '\n';
    s += system;
    s += '\n';
    s += user;
    return s;
}

std::string Prompt::cache_key() const { return sha256_hex(canonical()); }

ScoreRequest ScoreRequest::support(CommentContext ctx) {
    return ScoreRequest{ScoreKind::Support, std::move(ctx), std::nullopt};
}

ScoreRequest ScoreRequest::alignment(CommentContext first, CommentContext second) {
    return ScoreRequest{ScoreKind::Alignment, std::move(first), std::move(second)};
}

Prompt ScoreRequest::prompt() const {
    if (kind == ScoreKind::Support) {
        if (secondary) throw DomainError("support request must carry exactly one context");
        return build_support_prompt(primary);
    }
    if (!secondary) throw DomainError("alignment request must carry exactly two contexts");
    return build_alignment_prompt(primary, *secondary);
}

const std::string& support_system_prompt() {
    static const std::string text = std::string(
        "You'll receive:\n"
        "- message: a comment in a Reddit thread\n"
        "- parent: message's direct parent\n"
        "- ancestors: the thread's previous post/comments (in chronological order, may be incomplete)\n"
        "\n"
        "Evaluate how much the message supports the parent message. Ancestors provide contextualization.\n"
        "\n"
        "Output format:\n"
        "-1: vehemently opposes parent\n"
        "-0.5: opposes parent with restraint\n"
        "0: neutral\n"
        "0.5: supports parent with restraint\n"
        "1: passionately supports parent\n"
        "\n") + kFormatInstruction;
    return text;
}

const std::string& alignment_system_prompt() {
    static const std::string text = std::string(
        "You'll receive two comment_contexts, each containing:\n"
        "- message: comment in a Reddit thread\n"
        "- parent: message's direct parent\n"
        "- ancestors: the thread's previous post/comments (in chronological order, may be incomplete)\n"
        "\n"
        "Evaluate how much the two messages' underlying opinions align, like an n-dimensional dot product.\n"
        "Parents and ancestors provide contextualization.\n"
        "\n"
        "Output format. The two messages' opinions...\n"
        "-1: disagree\n"
        "-0.5: might disagree\n"
        "0: are independent, despite topic overlap\n"
        "0.5: agree with restraint\n"
        "1: ardently agree\n"
        "\n"
        "Guidelines:\n"
        "- Passionate opinions in similar topics may still be orthogonal: EVs make city streets way "
        "quieter. Mining for EV batteries wrecks ecosystems and exploits workers.\n"
        "- Compare opinions, not facts. Opinions may be implicit, or expressed through tone.\n"
        "\n") + kFormatInstruction;
    return text;
}

Prompt build_support_prompt(const CommentContext& ctx) {
    return Prompt{ScoreKind::Support, support_system_prompt(), context_json(ctx).dump(2)};
}

Prompt build_alignment_prompt(const CommentContext& first, const CommentContext& second) {
    ojson j = ojson::array();
    j.push_back(context_json(first));
    j.push_back(context_json(second));
    return Prompt{ScoreKind::Alignment, alignment_system_prompt(), j.dump(2)};
}

ScoreLevel snap_to_level(double x) {
    if (std::isnan(x)) throw DomainError("cannot snap NaN to a score level");
    const double h = std::clamp(2.0 * x, -2.0, 2.0);
    const double lo = std::floor(h);
    const double hi = std::ceil(h);
    double pick;
    if (h - lo < hi - h) {
        pick = lo;
    } else if (hi - h < h - lo) {
        pick = hi;
    } else {
        pick = std::abs(lo) < std::abs(hi) ? lo : hi; // exact tie (or on grid)
    }
    return ScoreLevel::from_half_steps(static_cast<int>(pick));
}

ScoreLevel parse_model_output(const std::string& text) {
    static const std::regex number(R"([-+]?(?:\d+(?:\.\d*)?|\.\d+))");
    std::smatch m;
    if (!std::regex_search(text, m, number)) {
        throw ScoringError("model output contains no numeric token", /*retryable=*/true, text);
    }
    double v = 0.0;
    try {
        v = std::stod(m.str());
    } catch (const std::out_of_range&) {
        v = m.str().front() == '-' ? -HUGE_VAL : HUGE_VAL;
    }
    return snap_to_level(v);
}

ScoreLevel mock_score(const Prompt& prompt) {
    const auto bucket = static_cast<int>(sha256_prefix64(prompt.canonical()) % 5);
    return ScoreLevel::from_ordinal(bucket);
}

ScoreLevel mock_score(const ScoreRequest& request) { return mock_score(request.prompt()); }

std::string MockScorer::complete(const Prompt& prompt) {
    calls_.fetch_add(1);
    return fmt::format("{}", mock_score(prompt).value());
}

std::optional<ScoreLevel> ScoreCache::lookup(const std::string& key) const {
    auto e = entry(key);
    if (!e) return std::nullopt;
    return e->value;
}

std::optional<CacheEntry> ScoreCache::entry(const std::string& key) const {
    auto j = store_.get(key);
    if (!j) return std::nullopt;
    try {
        return CacheEntry{key, ScoreLevel::from_value(j->at("value").get<double>()),
                          j->value("model_id", std::string{}), j->value("created_utc", std::int64_t{0})};
    } catch (const std::exception&) {
        return std::nullopt; // corrupt value is treated as a miss
    }
}

void ScoreCache::store(const CacheEntry& e) {
    nlohmann::ordered_json j;
    j["key"] = e.key;
    j["value"] = e.value.value();
    j["model_id"] = e.model_id;
    j["created_utc"] = e.created_utc;
    store_.put(nlohmann::json::parse(j.dump()));
}

namespace {

ScoreLevel call_with_retries(const Prompt& prompt, ScorerBackend& backend, const RetryPolicy& policy,
                             std::size_t& calls) {
    for (int attempt = 0;; ++attempt) {
        try {
            ++calls;
            return parse_model_output(backend.complete(prompt));
        } catch (const ScoringError& e) {
            if (!e.retryable() || attempt >= policy.max_retries) throw;
            double delay = policy.base_delay_s * std::pow(2.0, attempt);
            delay = std::max(delay, e.retry_after_s());
            delay = std::min(delay, policy.max_delay_s);
            if (delay > 0) std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
    }
}

} // namespace

ScoreLevel score(const Prompt& prompt, ScorerBackend& backend, ScoreCache& cache,
                 const RetryPolicy& policy) {
    const std::string key = prompt.cache_key();
    if (auto hit = cache.lookup(key)) return *hit;
    std::size_t calls = 0;
    const ScoreLevel level = call_with_retries(prompt, backend, policy, calls);
    cache.store(CacheEntry{key, level, backend.model_id(), now_utc()});
    return level;
}

ScoreLevel score(const ScoreRequest& request, ScorerBackend& backend, ScoreCache& cache,
                 const RetryPolicy& policy) {
    return score(request.prompt(), backend, cache, policy);
}

std::size_t BatchOutcome::failures() const {
    return static_cast<std::size_t>(
        std::count_if(levels.begin(), levels.end(), [](const auto& l) { return !l.has_value(); }));
}

BatchOutcome score_batch(std::size_t count, const std::function<Prompt(std::size_t)>& make_prompt,
                         ScorerBackend& backend, ScoreCache& cache, const RetryPolicy& policy) {
    BatchOutcome out;
    out.levels.assign(count, std::nullopt);
    out.errors.assign(count, {});

    std::vector<std::string> keys(count);
    std::unordered_map<std::string, std::size_t> first_index;
    std::vector<std::size_t> misses; // first index of each uncached key
    for (std::size_t i = 0; i < count; ++i) {
        keys[i] = make_prompt(i).cache_key();
        if (auto hit = cache.lookup(keys[i])) {
            out.levels[i] = hit;
            ++out.cache_hits;
            continue;
        }
        if (first_index.emplace(keys[i], i).second) misses.push_back(i);
    }

    std::vector<std::optional<ScoreLevel>> miss_level(misses.size());
    std::vector<std::string> miss_error(misses.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> calls{0};
    auto worker = [&] {
        std::size_t local_calls = 0;
        for (std::size_t m = next.fetch_add(1); m < misses.size(); m = next.fetch_add(1)) {
            const Prompt p = make_prompt(misses[m]);
            try {
                const ScoreLevel level = call_with_retries(p, backend, policy, local_calls);
                cache.store(CacheEntry{keys[misses[m]], level, backend.model_id(), now_utc()});
                miss_level[m] = level;
            } catch (const ScoringError& e) {
                miss_error[m] = e.what();
            }
        }
        calls.fetch_add(local_calls);
    };

    const std::size_t threads =
        std::min(std::max<std::size_t>(policy.max_in_flight, 1), misses.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    out.backend_calls = calls.load();

    std::unordered_map<std::string, std::size_t> miss_slot;
    for (std::size_t m = 0; m < misses.size(); ++m) miss_slot.emplace(keys[misses[m]], m);
    for (std::size_t i = 0; i < count; ++i) {
        if (out.levels[i]) continue;
        const std::size_t m = miss_slot.at(keys[i]);
        out.levels[i] = miss_level[m];
        out.errors[i] = miss_error[m];
    }
    return out;
}

} // namespace gravwell
