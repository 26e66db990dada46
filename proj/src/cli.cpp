#include "gravwell/cli.hpp"

#include <fstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gravwell/kernels.hpp"
#include "gravwell/pipeline.hpp"
#include "gravwell/remote.hpp"

namespace gravwell {

std::unique_ptr<ScorerBackend> make_scorer(const BackendSettings& s) {
    if (s.backend == "mock") return std::make_unique<MockScorer>();
    RemoteEndpoint ep{s.base_url, s.model, api_key_from_env(), s.timeout_s};
    return std::make_unique<RemoteScorer>(std::move(ep), s.temperature);
}

std::unique_ptr<Embedder> make_embedder(const BackendSettings& s) {
    if (s.backend == "mock") return std::make_unique<MockEmbedder>(s.dim);
    RemoteEndpoint ep{s.base_url, s.model, api_key_from_env(), s.timeout_s};
    return std::make_unique<RemoteEmbedder>(std::move(ep), s.max_retries, s.backoff_s);
}

namespace {

struct Options {
    std::string config;
    std::string out;
    std::vector<std::string> inputs;
    std::vector<std::string> subreddits;
    std::optional<int> max_ancestors;
    std::optional<std::string> exit_direction;
    std::string labels;
};

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config, "JSON config file");
    sub->add_option("--out", o.out, "output directory (overrides config out_dir)");
    sub->add_option("--input", o.inputs, "comment JSONL file (repeatable, replaces config inputs)");
    sub->add_option("--subreddit", o.subreddits, "subreddit to analyse (repeatable)");
    sub->add_option("--max-ancestors", o.max_ancestors, "ancestor comments kept above each parent");
    sub->add_option("--exit-direction", o.exit_direction, "weakest-first | strongest-first");
}

AnalysisConfig resolve_config(const Options& o) {
    AnalysisConfig c = o.config.empty() ? AnalysisConfig{} : load_config(o.config);
    if (!o.inputs.empty()) c.inputs.assign(o.inputs.begin(), o.inputs.end());
    if (!o.subreddits.empty()) c.subreddits = o.subreddits;
    if (o.max_ancestors) c.max_ancestors = *o.max_ancestors;
    if (o.exit_direction) c.exit_direction = parse_exit_direction(*o.exit_direction);
    if (!o.out.empty()) c.out_dir = o.out;
    validate(c);
    if (c.inputs.empty()) throw ConfigError("no input files (set 'inputs' in the config or pass --input)");
    return c;
}

void write_json_file(const std::filesystem::path& p, const nlohmann::json& j) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + p.string());
    f << j.dump(2) << '\n';
}

int cmd_ingest(const AnalysisConfig& c, std::ostream& out) {
    const Corpus corpus = load_corpus(c.inputs);
    const auto summary = to_json(summarize_corpus(corpus, c.subreddits));
    write_json_file(c.out_dir / kCorpusSummaryFile, summary);
    out << summary.dump(2) << '\n';
    return kExitOk;
}

int cmd_pipeline(const AnalysisConfig& c, Stage stage, std::ostream& out) {
    kernels::set_num_threads(c.threads);
    auto scorer = make_scorer(c.scorer);
    auto embedder = make_embedder(c.embedder);
    const Corpus corpus = load_corpus(c.inputs);
    ScoreCache cache = c.score_cache ? ScoreCache(*c.score_cache) : ScoreCache();
    CachedEmbedder cached(*embedder, c.embedding_cache);

    const RunResult result = run_pipeline(c, corpus, *scorer, cache, cached, stage);
    write_artifacts(result, c.out_dir, stage);
    out << fmt::format("{} subreddit(s), {} scorer call(s), {} cache hit(s), {} embedder call(s), {} diagnostic(s)\n",
                       result.subreddits.size(), result.scorer_calls, result.score_cache_hits,
                       result.embedder_calls, result.diagnostics.size());
    out << "artifacts written to " << c.out_dir.string() << '\n';
    return kExitOk;
}

// Re-evaluates an existing force table in the output directory.
int cmd_evaluate(const AnalysisConfig& c, std::ostream& out) {
    const auto forces_path = c.out_dir / kForcesFile;
    std::ifstream in(forces_path);
    if (!in) throw IoError("force table not found: " + forces_path.string() + " (run 'simulate' first)");
    const auto forces = read_forces_csv(in);
    const Corpus corpus = load_corpus(c.inputs);
    const auto rows = evaluate_forces(corpus, forces, c.subreddits);
    std::ofstream f(c.out_dir / kEvaluationFile, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + (c.out_dir / kEvaluationFile).string());
    write_evaluation_csv(f, rows);
    write_evaluation_csv(out, rows);
    return kExitOk;
}

int cmd_calibrate(const Options& o, std::ostream& out) {
    AnalysisConfig c = o.config.empty() ? AnalysisConfig{} : load_config(o.config);
    if (!o.out.empty()) c.out_dir = o.out;
    std::ifstream in(o.labels);
    if (!in) throw IoError("cannot open labels file: " + o.labels);
    const auto samples = read_calibration_labels(in);
    if (samples.empty()) throw DomainError("labels file has no samples: " + o.labels);
    const auto reports = calibrate(samples);
    std::filesystem::create_directories(c.out_dir);
    std::ofstream f(c.out_dir / kCalibrationFile, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + (c.out_dir / kCalibrationFile).string());
    write_calibration_json(f, reports);
    write_calibration_json(out, reports);
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Gravity-well echo chamber analysis"};
    app.require_subcommand(1);
    Options o;

    auto* ingest = app.add_subcommand("ingest", "parse comment dumps and summarise the corpus");
    auto* run = app.add_subcommand("run", "bias, forces and evaluation in one pass");
    auto* bias = app.add_subcommand("bias", "per-user confirmation-bias report");
    auto* simulate = app.add_subcommand("simulate", "bias report plus pull forces and predicted exit order");
    auto* evaluate = app.add_subcommand("evaluate", "compare the force table in --out with actual exit order");
    auto* calib = app.add_subcommand("calibrate", "agreement between human and model labels");
    for (auto* sub : {ingest, run, bias, simulate, evaluate, calib}) add_common(sub, o);
    calib->add_option("--labels", o.labels, "labels JSONL file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (calib->parsed()) return cmd_calibrate(o, out);
        const AnalysisConfig c = resolve_config(o);
        if (ingest->parsed()) return cmd_ingest(c, out);
        if (run->parsed()) return cmd_pipeline(c, Stage::Evaluate, out);
        if (bias->parsed()) return cmd_pipeline(c, Stage::Bias, out);
        if (simulate->parsed()) return cmd_pipeline(c, Stage::Simulate, out);
        return cmd_evaluate(c, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

} // namespace gravwell
