#include "gravwell/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

#include "gravwell/kernels.hpp"

namespace gravwell {

std::vector<std::string> Corpus::subreddits() const {
    std::set<std::string> s;
    for (const auto& c : index.comments()) s.insert(c.subreddit);
    return {s.begin(), s.end()};
}

Corpus load_corpus(std::span<const std::filesystem::path> inputs) {
    std::vector<Comment> all;
    std::unordered_set<std::string> seen;
    Corpus corpus;
    for (const auto& path : inputs) {
        if (!std::filesystem::exists(path)) throw IoError("input file not found: " + path.string());
        auto parsed = parse_comments_file(path.string());
        corpus.malformed += parsed.malformed;
        corpus.dropped += parsed.dropped;
        corpus.duplicates += parsed.duplicates;
        for (auto& c : parsed.comments) {
            if (seen.insert(c.id).second) {
                all.push_back(std::move(c));
            } else {
                ++corpus.duplicates;
            }
        }
    }
    corpus.index = ThreadIndex::build(std::move(all));
    return corpus;
}

CorpusSummary summarize_corpus(const Corpus& corpus, std::span<const std::string> filter) {
    std::set<std::string> wanted(filter.begin(), filter.end());
    std::map<std::string, SubredditSummary> by_sub;
    std::map<std::string, std::set<std::string>> users, threads;
    CorpusSummary out;
    out.malformed = corpus.malformed;
    out.dropped = corpus.dropped;
    out.duplicates = corpus.duplicates;
    for (const auto& c : corpus.index.comments()) {
        if (!wanted.empty() && !wanted.count(c.subreddit)) continue;
        auto& s = by_sub[c.subreddit];
        s.subreddit = c.subreddit;
        ++s.comments;
        if (corpus.index.is_orphan(c.id)) ++s.orphans;
        users[c.subreddit].insert(c.author);
        threads[c.subreddit].insert(c.thread_id);
        ++out.comments;
    }
    for (const auto& name : wanted) {
        if (!by_sub.count(name)) by_sub[name].subreddit = name;
    }
    for (auto& [name, s] : by_sub) {
        s.users = users[name].size();
        s.threads = threads[name].size();
        out.subreddits.push_back(s);
    }
    return out;
}

nlohmann::json to_json(const CorpusSummary& s) {
    nlohmann::ordered_json j;
    j["comments"] = s.comments;
    j["malformed"] = s.malformed;
    j["dropped"] = s.dropped;
    j["duplicates"] = s.duplicates;
    j["subreddits"] = nlohmann::ordered_json::array();
    for (const auto& r : s.subreddits) {
        nlohmann::ordered_json o;
        o["subreddit"] = r.subreddit;
        o["comments"] = r.comments;
        o["users"] = r.users;
        o["threads"] = r.threads;
        o["orphans"] = r.orphans;
        j["subreddits"].push_back(std::move(o));
    }
    return nlohmann::json::parse(j.dump());
}

std::vector<BiasScore> RunResult::all_bias() const {
    std::vector<BiasScore> out;
    for (const auto& s : subreddits) out.insert(out.end(), s.bias.begin(), s.bias.end());
    return out;
}

std::vector<ForceRow> RunResult::all_forces() const {
    std::vector<ForceRow> out;
    for (const auto& s : subreddits) out.insert(out.end(), s.forces.begin(), s.forces.end());
    return out;
}

std::vector<SubredditEvaluation> RunResult::all_evaluations() const {
    std::vector<SubredditEvaluation> out;
    for (const auto& s : subreddits) out.push_back(s.evaluation);
    return out;
}

namespace {

RetryPolicy retry_policy(const BackendSettings& s) {
    return RetryPolicy{s.max_retries, s.backoff_s, 30.0, s.max_in_flight};
}

struct EntryRef {
    std::size_t user = 0;  // index into histories
    std::size_t entry = 0; // index into history entries
};

struct AlignmentRef {
    std::size_t user = 0;
    std::size_t first = 0;  // history entry index
    std::size_t second = 0; // history entry index
};

// Scores supports and alignments for all users of one subreddit in two
// batches, then folds each user's pairs.
std::vector<BiasScore> subreddit_bias(const AnalysisConfig& config, const std::vector<UserHistory>& histories,
                                      ScorerBackend& scorer, ScoreCache& cache, RunResult& result) {
    const RetryPolicy policy = retry_policy(config.scorer);

    std::vector<EntryRef> entries;
    for (std::size_t u = 0; u < histories.size(); ++u) {
        for (std::size_t k = 0; k < histories[u].entries.size(); ++k) entries.push_back({u, k});
    }
    const auto sup = score_batch(
        entries.size(), [&](std::size_t i) { return support_prompt(histories[entries[i].user], entries[i].entry); },
        scorer, cache, policy);
    result.scorer_calls += sup.backend_calls;
    result.score_cache_hits += sup.cache_hits;

    std::vector<std::vector<std::optional<ScoreLevel>>> supports(histories.size());
    for (std::size_t u = 0; u < histories.size(); ++u) supports[u].resize(histories[u].entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        supports[entries[i].user][entries[i].entry] = sup.levels[i];
        if (!sup.levels[i]) {
            const auto& h = histories[entries[i].user];
            result.diagnostics.push_back(Diagnostic{
                "support", h.subreddit, h.user,
                fmt::format("comment {}: {}", h.entries[entries[i].entry].context.message.id, sup.errors[i])});
        }
    }

    std::vector<std::vector<kernels::PairIndex>> pairs(histories.size());
    std::vector<std::vector<std::size_t>> ok(histories.size());
    std::vector<AlignmentRef> refs;
    std::vector<std::size_t> first_ref(histories.size() + 1, 0);
    for (std::size_t u = 0; u < histories.size(); ++u) {
        first_ref[u] = refs.size();
        ok[u] = scoreable_entries(supports[u]);
        pairs[u] = select_pairs(ok[u].size(), config.pair_cap,
                                user_seed(config.seed, histories[u].user, histories[u].subreddit));
        for (const auto& p : pairs[u]) refs.push_back({u, ok[u][p.i], ok[u][p.j]});
    }
    first_ref[histories.size()] = refs.size();

    const auto align = score_batch(
        refs.size(), [&](std::size_t i) { return alignment_prompt(histories[refs[i].user], refs[i].first, refs[i].second); },
        scorer, cache, policy);
    result.scorer_calls += align.backend_calls;
    result.score_cache_hits += align.cache_hits;

    std::vector<BiasScore> out;
    out.reserve(histories.size());
    for (std::size_t u = 0; u < histories.size(); ++u) {
        const auto begin = align.levels.begin() + static_cast<std::ptrdiff_t>(first_ref[u]);
        const auto end = align.levels.begin() + static_cast<std::ptrdiff_t>(first_ref[u + 1]);
        std::vector<std::optional<ScoreLevel>> user_align(begin, end);
        for (std::size_t i = first_ref[u]; i < first_ref[u + 1]; ++i) {
            if (align.levels[i]) continue;
            const auto& h = histories[u];
            result.diagnostics.push_back(Diagnostic{
                "alignment", h.subreddit, h.user,
                fmt::format("comments {} / {}: {}", h.entries[refs[i].first].context.message.id,
                            h.entries[refs[i].second].context.message.id, align.errors[i])});
        }
        out.push_back(finalize_bias(histories[u], supports[u], pairs[u], user_align));
    }
    return out;
}

std::vector<Comment> comments_of(const ThreadIndex& index, const std::string& subreddit) {
    std::vector<Comment> out;
    for (const auto& c : index.comments()) {
        if (c.subreddit == subreddit) out.push_back(c);
    }
    return out;
}

} // namespace

SubredditEvaluation evaluate_forces(std::span<const Comment> comments, const std::string& subreddit,
                                    std::span<const ForceRow> forces) {
    RankSeries predicted, actual;
    for (const auto& f : forces) {
        if (f.subreddit == subreddit) predicted.items.emplace_back(f.user, f.predicted_rank);
    }
    for (const auto& r : compute_actual_exit_order(comments, subreddit)) {
        actual.items.emplace_back(r.user, r.actual_rank);
    }
    return evaluate_subreddit(subreddit, predicted, actual);
}

std::vector<SubredditEvaluation> evaluate_forces(const Corpus& corpus, std::span<const ForceRow> forces,
                                                 std::span<const std::string> subreddits) {
    std::set<std::string> names(subreddits.begin(), subreddits.end());
    if (names.empty()) {
        for (const auto& f : forces) names.insert(f.subreddit);
    }
    std::vector<SubredditEvaluation> out;
    for (const auto& name : names) out.push_back(evaluate_forces(comments_of(corpus.index, name), name, forces));
    return out;
}

RunResult run_pipeline(const AnalysisConfig& config, const Corpus& corpus, ScorerBackend& scorer,
                       ScoreCache& cache, CachedEmbedder& embedder, Stage stage) {
    validate(config);
    RunResult result;
    const auto names = config.subreddits.empty() ? corpus.subreddits() : config.subreddits;
    const std::set<std::string> ordered(names.begin(), names.end());
    const std::size_t embed_calls_before = embedder.backend_calls();

    for (const auto& name : ordered) {
        SubredditRun run;
        run.subreddit = name;
        run.evaluation.subreddit = name;
        const auto comments = comments_of(corpus.index, name);

        std::set<std::string> authors;
        for (const auto& c : comments) authors.insert(c.author);
        std::vector<UserHistory> histories;
        histories.reserve(authors.size());
        for (const auto& a : authors) {
            histories.push_back(extract_parent_contexts(a, name, corpus.index, config.max_ancestors));
        }
        run.bias = subreddit_bias(config, histories, scorer, cache, result);

        if (stage == Stage::Bias) {
            result.subreddits.push_back(std::move(run));
            continue;
        }

        try {
            SubgroupModel model;
            model.subreddit = name;
            model.mass = subgroup_mass(comments, name);
            model.tm = config.tm_for(name);
            model.tsm = config.tsm_for(name);
            model.top_k = config.top_k;

            // Warm the embedding cache with bounded concurrency.
            std::vector<std::string> texts;
            for (const Comment* c : top_content(comments, config.top_k)) texts.push_back(c->body);
            for (const auto& h : histories) {
                for (const auto& e : h.entries) texts.push_back(e.context.message.body);
            }
            embedder.embed_all(texts, config.embedder.max_in_flight);

            model.centroid = subgroup_centroid(comments, config.top_k, embedder);

            std::vector<std::string> users;
            std::vector<double> m_user;
            std::vector<double> block;
            for (std::size_t u = 0; u < histories.size(); ++u) {
                if (histories[u].entries.empty()) continue;
                try {
                    auto v = user_embedding(histories[u], embedder);
                    if (v.dim() != model.centroid.dim()) throw AnalysisError("embedding dimension mismatch");
                    users.push_back(histories[u].user);
                    m_user.push_back(run.bias[u].m_a);
                    block.insert(block.end(), v.values.begin(), v.values.end());
                } catch (const AnalysisError& e) {
                    result.diagnostics.push_back(Diagnostic{"embedding", name, histories[u].user, e.what()});
                }
            }
            std::vector<double> d(users.size());
            kernels::omp::cosine_distances(block, model.centroid.dim(), model.centroid.values, kDistanceEpsilon, d);

            const auto forces = pull_forces(model, users, m_user, d);
            const auto ranks = simulate_exit_order(forces, config.exit_direction);
            for (std::size_t k = 0; k < forces.size(); ++k) {
                run.forces.push_back(ForceRow{forces[k].user, name, forces[k].m_user, forces[k].d, forces[k].f_w, ranks[k]});
            }

            if (stage == Stage::Evaluate) {
                run.evaluation = evaluate_forces(comments, name, run.forces);
                if (!run.evaluation.note.empty()) {
                    result.diagnostics.push_back(Diagnostic{"evaluation", name, "", run.evaluation.note});
                }
            }
        } catch (const Error& e) {
            // AnalysisError, or an embedding backend that kept failing.
            result.diagnostics.push_back(Diagnostic{"analysis", name, "", e.what()});
            run.forces.clear();
            run.evaluation = SubredditEvaluation{name, 0, std::nullopt, std::nullopt, e.what()};
        }
        result.subreddits.push_back(std::move(run));
    }
    result.embedder_calls = embedder.backend_calls() - embed_calls_before;
    return result;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

} // namespace

void write_artifacts(const RunResult& result, const std::filesystem::path& out_dir, Stage stage) {
    std::filesystem::create_directories(out_dir);
    {
        auto out = open_out(out_dir / kBiasFile);
        write_bias_jsonl(out, result.all_bias());
    }
    if (stage != Stage::Bias) {
        auto out = open_out(out_dir / kForcesFile);
        write_forces_csv(out, result.all_forces());
    }
    if (stage == Stage::Evaluate) {
        auto out = open_out(out_dir / kEvaluationFile);
        write_evaluation_csv(out, result.all_evaluations());
    }
    {
        auto out = open_out(out_dir / kDiagnosticsFile);
        write_diagnostics_jsonl(out, result.diagnostics);
    }
    {
        nlohmann::ordered_json j;
        j["subreddits"] = result.subreddits.size();
        j["scorer_calls"] = result.scorer_calls;
        j["score_cache_hits"] = result.score_cache_hits;
        j["embedder_calls"] = result.embedder_calls;
        j["diagnostics"] = result.diagnostics.size();
        auto out = open_out(out_dir / kSummaryFile);
        out << j.dump(2) << '\n';
    }
}

} // namespace gravwell
