#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gravwell/bias.hpp"
#include "gravwell/config.hpp"
#include "gravwell/gravity.hpp"
#include "gravwell/ingest.hpp"
#include "gravwell/metrics.hpp"
#include "gravwell/reports.hpp"
#include "gravwell/scoring.hpp"

namespace gravwell {

struct Corpus {
    ThreadIndex index;
    std::size_t malformed = 0;
    std::size_t dropped = 0;
    std::size_t duplicates = 0;

    // Subreddits present in the corpus, sorted.
    std::vector<std::string> subreddits() const;
};

// Parses every input file (ids deduplicated across files) and builds the
// thread index. Throws IoError naming a missing file.
Corpus load_corpus(std::span<const std::filesystem::path> inputs);

struct SubredditSummary {
    std::string subreddit;
    std::size_t comments = 0;
    std::size_t users = 0;
    std::size_t threads = 0;
    std::size_t orphans = 0;
};

struct CorpusSummary {
    std::vector<SubredditSummary> subreddits;
    std::size_t comments = 0;
    std::size_t malformed = 0;
    std::size_t dropped = 0;
    std::size_t duplicates = 0;
};

// `filter` empty: every subreddit.
CorpusSummary summarize_corpus(const Corpus& corpus, std::span<const std::string> filter);
nlohmann::json to_json(const CorpusSummary& s);

enum class Stage { Bias, Simulate, Evaluate };

struct SubredditRun {
    std::string subreddit;
    std::vector<BiasScore> bias;    // every author, sorted by user
    std::vector<ForceRow> forces;   // users with a defined distance, sorted by user
    SubredditEvaluation evaluation; // filled when stage == Evaluate
};

struct RunResult {
    std::vector<SubredditRun> subreddits;
    std::vector<Diagnostic> diagnostics;
    std::size_t scorer_calls = 0;
    std::size_t score_cache_hits = 0;
    std::size_t embedder_calls = 0;

    std::vector<BiasScore> all_bias() const;
    std::vector<ForceRow> all_forces() const;
    std::vector<SubredditEvaluation> all_evaluations() const;
};

// Runs the analysis up to `stage` for the configured subreddits (all when
// the list is empty). Per-user and per-pair scoring failures are recorded in
// diagnostics; configuration errors propagate.
RunResult run_pipeline(const AnalysisConfig& config, const Corpus& corpus, ScorerBackend& scorer,
                       ScoreCache& cache, CachedEmbedder& embedder, Stage stage = Stage::Evaluate);

// Spearman evaluation of a force table's predicted ranks against the actual
// exit order derived from `comments`.
SubredditEvaluation evaluate_forces(std::span<const Comment> comments, const std::string& subreddit,
                                    std::span<const ForceRow> forces);
// One row per subreddit (the force table's subreddits when `subreddits` is empty).
std::vector<SubredditEvaluation> evaluate_forces(const Corpus& corpus, std::span<const ForceRow> forces,
                                                 std::span<const std::string> subreddits);

// Artifact file names inside the output directory.
inline constexpr const char* kBiasFile = "bias.jsonl";
inline constexpr const char* kForcesFile = "forces.csv";
inline constexpr const char* kEvaluationFile = "evaluation.csv";
inline constexpr const char* kDiagnosticsFile = "diagnostics.jsonl";
inline constexpr const char* kCalibrationFile = "calibration.json";
inline constexpr const char* kSummaryFile = "run_summary.json";
inline constexpr const char* kCorpusSummaryFile = "corpus_summary.json";

// Writes the artifacts belonging to `stage` (bias always, forces from
// Simulate, evaluation from Evaluate) plus diagnostics and the run summary.
void write_artifacts(const RunResult& result, const std::filesystem::path& out_dir, Stage stage);

} // namespace gravwell
