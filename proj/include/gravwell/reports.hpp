#pragma once

// Report artifacts: bias JSONL, force CSV, evaluation CSV (subreddit,
// n_common, spearman_rho, p_value), calibration JSON, diagnostics JSONL.
// Reals are written in shortest round-trip form so every report parses back
// to the same values.

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gravwell/bias.hpp"
#include "gravwell/metrics.hpp"

namespace gravwell {

struct ForceRow {
    std::string user;
    std::string subreddit;
    double m_a = 1.0;
    double d = 1.0;
    double f_w = 0.0;
    double predicted_rank = 0.0;

    friend bool operator==(const ForceRow&, const ForceRow&) = default;
};

struct CalibrationReport {
    ScoreKind kind = ScoreKind::Support;
    std::size_t n = 0;
    double qwk = 0.0;
    double nmae = 0.0;
    std::string agreement; // band name for qwk

    friend bool operator==(const CalibrationReport&, const CalibrationReport&) = default;
};

struct Diagnostic {
    std::string stage; // support | alignment | embedding | analysis | evaluation
    std::string subreddit;
    std::string user;
    std::string message;
};

std::string format_real(double v);

// CSV field quoting (RFC 4180) and a line splitter that honours it.
std::string csv_field(const std::string& s);
std::vector<std::string> split_csv_line(const std::string& line);

void write_bias_jsonl(std::ostream& out, std::span<const BiasScore> rows);
std::vector<BiasScore> read_bias_jsonl(std::istream& in);

inline constexpr const char* kForceCsvHeader = "user,subreddit,m_a,d,f_w,predicted_rank";
void write_forces_csv(std::ostream& out, std::span<const ForceRow> rows);
std::vector<ForceRow> read_forces_csv(std::istream& in);

inline constexpr const char* kEvaluationCsvHeader = "subreddit,n_common,spearman_rho,p_value";
inline constexpr const char* kMissingValue = "NA";
void write_evaluation_csv(std::ostream& out, std::span<const SubredditEvaluation> rows);
std::vector<SubredditEvaluation> read_evaluation_csv(std::istream& in);

void write_calibration_json(std::ostream& out, std::span<const CalibrationReport> reports);
std::vector<CalibrationReport> read_calibration_json(std::istream& in);

void write_diagnostics_jsonl(std::ostream& out, std::span<const Diagnostic> rows);

// Labels file: one {"kind": "support"|"alignment", "human": x, "ai": y} per
// line. Throws IoError / DomainError on bad input.
std::vector<CalibrationSample> read_calibration_labels(std::istream& in);

// One report per kind present, support first.
std::vector<CalibrationReport> calibrate(std::span<const CalibrationSample> samples);

} // namespace gravwell
