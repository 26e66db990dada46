#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gravwell/hashing.hpp"
#include "gravwell/remote.hpp"
#include "gravwell/scoring.hpp"
#include "test_util.hpp"

using namespace gravwell;
using gravwell::testing::comment;
using gravwell::testing::lv;

namespace {

CommentContext ctx(const std::string& msg, const std::string& parent, std::vector<std::string> ancestors = {}) {
    CommentContext c;
    c.message = comment("m", "p", "u", 10, msg);
    c.parent = comment("p", std::nullopt, "v", 5, parent);
    int t = 1;
    for (auto& a : ancestors) c.ancestors.push_back(comment("a" + std::to_string(t), std::nullopt, "w", t, a)), ++t;
    return c;
}

// Brute-force nearest grid point; ties toward zero; saturating.
double snap_oracle(double x) {
    double best = 0.0;
    double best_d = std::abs(x);
    for (double g : ScoreLevel::kValues) {
        const double d = std::abs(x - g);
        if (d < best_d || (d == best_d && std::abs(g) < std::abs(best))) {
            best = g;
            best_d = d;
        }
    }
    return best;
}

// Fails `failures` times with the given retryability, then answers `answer`.
class FlakyScorer final : public ScorerBackend {
public:
    FlakyScorer(int failures, bool retryable, std::string answer = "0.5")
        : failures_(failures), retryable_(retryable), answer_(std::move(answer)) {}
    std::string model_id() const override { return "flaky"; }
    std::string complete(const Prompt&) override {
        ++calls;
        if (calls <= failures_) throw ScoringError("boom", retryable_);
        return answer_;
    }
    int calls = 0;

private:
    int failures_;
    bool retryable_;
    std::string answer_;
};

RetryPolicy fast_policy(int retries = 3) {
    RetryPolicy p;
    p.max_retries = retries;
    p.base_delay_s = 0.0;
    return p;
}

} // namespace

TEST(Prompts, SupportPromptIsDeterministic) {
    const auto c = ctx("yes indeed", "cats are great", {"root post"});
    const auto a = build_support_prompt(c);
    const auto b = build_support_prompt(c);
    EXPECT_EQ(a.canonical(), b.canonical());
    EXPECT_EQ(a.cache_key(), b.cache_key());
    EXPECT_EQ(a.cache_key().size(), 64u);
}

TEST(Prompts, EmptyAncestorsSerializeAsEmptyArray) {
    const auto p = build_support_prompt(ctx("m", "p"));
    const auto j = nlohmann::json::parse(p.user);
    EXPECT_TRUE(j.at("ancestors").is_array());
    EXPECT_TRUE(j.at("ancestors").empty());
    EXPECT_EQ(j.at("message"), "m");
    EXPECT_EQ(j.at("parent"), "p");
}

TEST(Prompts, AncestorsOldestFirst) {
    const auto p = build_support_prompt(ctx("m", "p", {"first", "second", "third"}));
    const auto j = nlohmann::json::parse(p.user);
    EXPECT_EQ(j.at("ancestors"), (nlohmann::json{"first", "second", "third"}));
    EXPECT_LT(p.user.find("first"), p.user.find("second"));
    EXPECT_LT(p.user.find("second"), p.user.find("third"));
    // message precedes parent precedes ancestors in the payload
    EXPECT_LT(p.user.find("\"message\""), p.user.find("\"parent\""));
    EXPECT_LT(p.user.find("\"parent\""), p.user.find("\"ancestors\""));
}

TEST(Prompts, AlignmentOrderMatters) {
    const auto a = ctx("alpha", "pa", {"ra"});
    const auto b = ctx("beta", "pb", {"rb1", "rb2"});
    const auto ab = build_alignment_prompt(a, b);
    const auto ba = build_alignment_prompt(b, a);
    EXPECT_NE(ab.user, ba.user);
    const auto j = nlohmann::json::parse(ab.user);
    ASSERT_EQ(j.size(), 2u);
    EXPECT_EQ(j[0].at("ancestors"), (nlohmann::json{"ra"}));
    EXPECT_EQ(j[1].at("ancestors"), (nlohmann::json{"rb1", "rb2"}));
    EXPECT_NO_THROW(build_alignment_prompt(a, a));
}

TEST(Prompts, SystemPromptsAskForOneNumber) {
    for (const auto* s : {&support_system_prompt(), &alignment_system_prompt()}) {
        EXPECT_NE(s->find("-1, -0.5, 0, 0.5, 1"), std::string::npos);
    }
    EXPECT_EQ(ScoreRequest::support(ctx("m", "p")).prompt().kind, ScoreKind::Support);
    ScoreRequest bad{ScoreKind::Alignment, ctx("m", "p"), std::nullopt};
    EXPECT_THROW(bad.prompt(), DomainError);
}

TEST(Parsing, ExactLevels) {
    EXPECT_EQ(parse_model_output("-0.5"), lv(-0.5));
    EXPECT_EQ(parse_model_output("1"), lv(1));
    EXPECT_EQ(parse_model_output("0"), lv(0));
}

TEST(Parsing, SnapsToNearestLevel) {
    EXPECT_EQ(parse_model_output("0.4"), lv(0.5));
    EXPECT_EQ(parse_model_output("2"), lv(1));
    EXPECT_EQ(parse_model_output("-7.3"), lv(-1));
    EXPECT_EQ(parse_model_output("0.25"), lv(0));
    EXPECT_EQ(parse_model_output("-0.75"), lv(-0.5));
}

TEST(Parsing, SnappingMatchesOracle) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int k = 0; k < 20000; ++k) {
        const double x = u(rng);
        EXPECT_EQ(snap_to_level(x).value(), snap_oracle(x)) << x;
    }
    for (int q = -16; q <= 16; ++q) {
        const double x = q * 0.125;
        EXPECT_EQ(snap_to_level(x).value(), snap_oracle(x)) << x;
    }
}

TEST(Parsing, FirstNumericToken) {
    EXPECT_EQ(parse_model_output("I think the answer is 1"), lv(1));
    EXPECT_EQ(parse_model_output("Score: -0.5 (not 1)"), lv(-0.5));
    EXPECT_EQ(parse_model_output("  .5\n"), lv(0.5));
    EXPECT_EQ(parse_model_output("+1."), lv(1));
    try {
        parse_model_output("no idea");
        FAIL();
    } catch (const ScoringError& e) {
        EXPECT_TRUE(e.retryable());
        EXPECT_EQ(e.raw(), "no idea");
    }
}

TEST(Mock, StableAndKindSensitive) {
    const auto c = ctx("Totally agree with this.", "Rust is memory safe.", {"What language should I learn?"});
    const auto a = mock_score(ScoreRequest::support(c));
    EXPECT_EQ(a, mock_score(ScoreRequest::support(c)));
    // Pinned from the hash definition: sha256(canonical) big-endian prefix mod 5.
    const auto p = build_support_prompt(c);
    EXPECT_EQ(a.ordinal(), static_cast<int>(sha256_prefix64(p.canonical()) % 5));
    EXPECT_EQ(a, lv(0.5));

    const Prompt s{ScoreKind::Support, "sys", "same text"};
    const Prompt al{ScoreKind::Alignment, "sys", "same text"};
    EXPECT_NE(s.canonical(), al.canonical());
    EXPECT_NE(s.cache_key(), al.cache_key());
}

TEST(Mock, LevelsAreRoughlyUniform) {
    std::mt19937_64 rng(99);
    std::array<int, 5> counts{};
    const int n = 10000;
    for (int k = 0; k < n; ++k) {
        const auto c = ctx("msg " + std::to_string(rng()), "parent " + std::to_string(rng()));
        ++counts[static_cast<std::size_t>(mock_score(ScoreRequest::support(c)).ordinal())];
    }
    for (int c : counts) EXPECT_NEAR(static_cast<double>(c) / n, 0.2, 0.05);
}

TEST(Hashing, KnownDigests) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_prefix64("abc"), 0xba7816bf8f01cfeaULL);
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Cache, SecondCallIsServedFromCache) {
    MockScorer mock;
    ScoreCache cache;
    const auto p = build_support_prompt(ctx("m", "p"));
    const auto a = score(p, mock, cache, fast_policy());
    EXPECT_EQ(mock.calls(), 1u);
    EXPECT_EQ(score(p, mock, cache, fast_policy()), a);
    EXPECT_EQ(mock.calls(), 1u);
}

TEST(Cache, PersistsAcrossReload) {
    gravwell::testing::TempDir dir;
    const auto path = dir / "scores.jsonl";
    const auto p = build_alignment_prompt(ctx("a", "b"), ctx("c", "d"));
    ScoreLevel first;
    {
        MockScorer mock;
        ScoreCache cache(path);
        first = score(p, mock, cache, fast_policy());
    }
    MockScorer mock;
    ScoreCache cache(path);
    EXPECT_EQ(cache.size(), 1u);
    EXPECT_EQ(score(p, mock, cache, fast_policy()), first);
    EXPECT_EQ(mock.calls(), 0u);
    const auto e = cache.entry(p.cache_key());
    ASSERT_TRUE(e);
    EXPECT_EQ(e->model_id, "mock-scorer-v1");
}

TEST(Cache, CorruptLinesAreSkipped) {
    gravwell::testing::TempDir dir;
    const auto path = dir / "scores.jsonl";
    gravwell::testing::write_file(path, "{bad json\n{\"key\":\"k\",\"value\":0.5,\"model_id\":\"m\",\"created_utc\":1}\n"
                                        "{\"key\":\"z\",\"value\":0.3}\n");
    ScoreCache cache(path);
    EXPECT_EQ(cache.lookup("k"), lv(0.5));
    EXPECT_FALSE(cache.lookup("z")); // off-grid value is a miss
}

TEST(Retry, TransientFailuresAreRetried) {
    FlakyScorer flaky(2, true);
    ScoreCache cache;
    EXPECT_EQ(score(Prompt{ScoreKind::Support, "s", "u"}, flaky, cache, fast_policy(3)), lv(0.5));
    EXPECT_EQ(flaky.calls, 3);
}

TEST(Retry, ExhaustedRetriesThrow) {
    FlakyScorer flaky(10, true);
    ScoreCache cache;
    EXPECT_THROW(score(Prompt{ScoreKind::Support, "s", "u"}, flaky, cache, fast_policy(3)), ScoringError);
    EXPECT_EQ(flaky.calls, 4);
    EXPECT_EQ(cache.size(), 0u);
}

TEST(Retry, FatalFailureIsNotRetried) {
    FlakyScorer flaky(1, false);
    ScoreCache cache;
    EXPECT_THROW(score(Prompt{ScoreKind::Support, "s", "u"}, flaky, cache, fast_policy(3)), ScoringError);
    EXPECT_EQ(flaky.calls, 1);
}

TEST(Retry, UnparseableOutputIsRetried) {
    class Chatty final : public ScorerBackend {
    public:
        std::string model_id() const override { return "chatty"; }
        std::string complete(const Prompt&) override { return ++calls == 1 ? "hmm, hard to say" : "Answer: -1"; }
        int calls = 0;
    } chatty;
    ScoreCache cache;
    EXPECT_EQ(score(Prompt{ScoreKind::Support, "s", "u"}, chatty, cache, fast_policy()), lv(-1));
    EXPECT_EQ(chatty.calls, 2);
}

TEST(Batch, DeduplicatesAndIsScheduleIndependent) {
    std::vector<Prompt> prompts;
    for (int k = 0; k < 40; ++k) prompts.push_back(Prompt{ScoreKind::Support, "s", "u" + std::to_string(k % 25)});
    std::vector<std::optional<ScoreLevel>> reference;
    for (std::size_t inflight : {1u, 3u, 8u}) {
        MockScorer mock;
        ScoreCache cache;
        RetryPolicy p = fast_policy();
        p.max_in_flight = inflight;
        const auto out = score_batch(prompts.size(), [&](std::size_t i) { return prompts[i]; }, mock, cache, p);
        EXPECT_EQ(out.backend_calls, 25u);
        EXPECT_EQ(mock.calls(), 25u);
        EXPECT_EQ(out.failures(), 0u);
        if (reference.empty()) reference = out.levels;
        EXPECT_EQ(out.levels, reference);
        for (std::size_t i = 0; i < prompts.size(); ++i) EXPECT_EQ(*out.levels[i], mock_score(prompts[i]));
    }
}

TEST(Batch, FailuresAreReportedPerIndex) {
    FlakyScorer fatal(100, false);
    ScoreCache cache;
    const auto out = score_batch(3, [](std::size_t i) { return Prompt{ScoreKind::Support, "s", std::to_string(i)}; },
                                 fatal, cache, fast_policy());
    EXPECT_EQ(out.failures(), 3u);
    for (const auto& e : out.errors) EXPECT_FALSE(e.empty());
}

namespace {

// Minimal OpenAI-compatible server on a random local port.
class FakeApi {
public:
    FakeApi() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            last_auth = req.get_header_value("Authorization");
            last_body = nlohmann::json::parse(req.body);
            if (chat_calls++ == 0) {
                res.status = 429;
                res.set_header("Retry-After", "0");
                return;
            }
            nlohmann::json out{{"choices", {{{"message", {{"role", "assistant"}, {"content", "0.5"}}}}}}};
            res.set_content(out.dump(), "application/json");
        });
        server_.Post("/v1/embeddings", [this](const httplib::Request&, httplib::Response& res) {
            if (embed_calls++ == 0) {
                res.status = 503;
                return;
            }
            nlohmann::json out{{"data", {{{"embedding", {0.25, -0.5, 1.0}}}}}};
            res.set_content(out.dump(), "application/json");
        });
        server_.Post("/bad/chat/completions", [](const httplib::Request&, httplib::Response& res) {
            res.status = 401;
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeApi() {
        server_.stop();
        thread_.join();
    }
    std::string base(const std::string& prefix = "/v1") const {
        return "http://127.0.0.1:" + std::to_string(port_) + prefix;
    }

    std::atomic<int> chat_calls{0};
    std::atomic<int> embed_calls{0};
    std::string last_auth;
    nlohmann::json last_body;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

} // namespace

TEST(Remote, ScorerRetriesRateLimitThenParses) {
    FakeApi api;
    RemoteScorer scorer(RemoteEndpoint{api.base(), "test-model", "secret", 5.0}, 0.0);
    ScoreCache cache;
    const Prompt p{ScoreKind::Support, "sys", "payload"};
    EXPECT_EQ(score(p, scorer, cache, fast_policy()), lv(0.5));
    EXPECT_EQ(api.chat_calls.load(), 2);
    EXPECT_EQ(api.last_auth, "Bearer secret");
    EXPECT_EQ(api.last_body.at("model"), "test-model");
    EXPECT_EQ(api.last_body.at("messages")[0].at("content"), "sys");
    EXPECT_EQ(api.last_body.at("messages")[1].at("content"), "payload");
    EXPECT_EQ(api.last_body.at("temperature"), 0.0);
}

TEST(Remote, ClientErrorIsFatal) {
    FakeApi api;
    RemoteScorer scorer(RemoteEndpoint{api.base("/bad"), "m", "k", 5.0});
    try {
        scorer.complete(Prompt{ScoreKind::Support, "s", "u"});
        FAIL();
    } catch (const ScoringError& e) {
        EXPECT_FALSE(e.retryable());
    }
}

TEST(Remote, EmbedderRetriesServerError) {
    FakeApi api;
    RemoteEmbedder emb(RemoteEndpoint{api.base(), "emb-model", "k", 5.0}, 3, 0.0);
    EXPECT_EQ(emb.embed("hello").values, (std::vector<double>{0.25, -0.5, 1.0}));
    EXPECT_EQ(api.embed_calls.load(), 2);
}

TEST(Remote, UnreachableHostIsRetryable) {
    RemoteScorer scorer(RemoteEndpoint{"http://127.0.0.1:1/v1", "m", "k", 1.0});
    try {
        scorer.complete(Prompt{ScoreKind::Support, "s", "u"});
        FAIL();
    } catch (const ScoringError& e) {
        EXPECT_TRUE(e.retryable());
    }
}

TEST(Remote, ConfigurationErrors) {
    EXPECT_THROW(RemoteScorer(RemoteEndpoint{"http://x/v1", "m", "", 1.0}), ConfigError);
    EXPECT_THROW(RemoteScorer(RemoteEndpoint{"http://x/v1", "", "k", 1.0}), ConfigError);
    EXPECT_THROW(RemoteScorer(RemoteEndpoint{"ftp://x", "m", "k", 1.0}), ConfigError);
    ::unsetenv(kApiKeyEnv);
    EXPECT_THROW(api_key_from_env(), ConfigError);
    ::setenv(kApiKeyEnv, "abc", 1);
    EXPECT_EQ(api_key_from_env(), "abc");
    ::unsetenv(kApiKeyEnv);
}
