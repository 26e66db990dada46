#include "gravwell/reports.hpp"

#include <charconv>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace gravwell {

namespace {

using ojson = nlohmann::ordered_json;
using nlohmann::json;

double parse_real(const std::string& s, const char* what) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) throw IoError(fmt::format("bad {} value '{}'", what, s));
    return v;
}

void read_csv_rows(std::istream& in, const char* header, std::vector<std::vector<std::string>>& rows,
                   std::size_t width) {
    std::string line;
    if (!std::getline(in, line) || line != header) throw IoError(fmt::format("expected CSV header '{}'", header));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != width) throw IoError("CSV row has the wrong number of fields: " + line);
        rows.push_back(std::move(fields));
    }
}

ScoreKind parse_kind(const std::string& s) {
    if (s == "support") return ScoreKind::Support;
    if (s == "alignment") return ScoreKind::Alignment;
    throw DomainError("unknown score kind: " + s);
}

} // namespace

std::string format_real(double v) { return fmt::format("{}", v); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

void write_bias_jsonl(std::ostream& out, std::span<const BiasScore> rows) {
    for (const auto& r : rows) {
        ojson j;
        j["user"] = r.user;
        j["subreddit"] = r.subreddit;
        j["n"] = r.n;
        j["pair_count"] = r.pair_count;
        j["m_unweighted"] = r.m_unweighted;
        j["m_a"] = r.m_a;
        j["failures"] = r.failures;
        out << j.dump() << '\n';
    }
}

std::vector<BiasScore> read_bias_jsonl(std::istream& in) {
    std::vector<BiasScore> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw IoError("bad bias report line: " + line);
        try {
            rows.push_back(BiasScore{j.at("user").get<std::string>(), j.at("subreddit").get<std::string>(),
                                     j.at("n").get<std::size_t>(), j.at("pair_count").get<std::size_t>(),
                                     j.at("m_unweighted").get<double>(), j.at("m_a").get<double>(),
                                     j.at("failures").get<std::size_t>()});
        } catch (const json::exception& e) {
            throw IoError(std::string("bad bias report line: ") + e.what());
        }
    }
    return rows;
}

void write_forces_csv(std::ostream& out, std::span<const ForceRow> rows) {
    out << kForceCsvHeader << '\n';
    for (const auto& r : rows) {
        out << csv_field(r.user) << ',' << csv_field(r.subreddit) << ',' << format_real(r.m_a) << ','
            << format_real(r.d) << ',' << format_real(r.f_w) << ',' << format_real(r.predicted_rank) << '\n';
    }
}

std::vector<ForceRow> read_forces_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    read_csv_rows(in, kForceCsvHeader, rows, 6);
    std::vector<ForceRow> out;
    for (const auto& f : rows) {
        out.push_back(ForceRow{f[0], f[1], parse_real(f[2], "m_a"), parse_real(f[3], "d"),
                               parse_real(f[4], "f_w"), parse_real(f[5], "predicted_rank")});
    }
    return out;
}

void write_evaluation_csv(std::ostream& out, std::span<const SubredditEvaluation> rows) {
    out << kEvaluationCsvHeader << '\n';
    for (const auto& r : rows) {
        out << csv_field(r.subreddit) << ',' << r.n_common << ','
            << (r.rho ? format_real(*r.rho) : kMissingValue) << ','
            << (r.p_value ? format_real(*r.p_value) : kMissingValue) << '\n';
    }
}

std::vector<SubredditEvaluation> read_evaluation_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    read_csv_rows(in, kEvaluationCsvHeader, rows, 4);
    std::vector<SubredditEvaluation> out;
    for (const auto& f : rows) {
        SubredditEvaluation e;
        e.subreddit = f[0];
        e.n_common = static_cast<std::size_t>(parse_real(f[1], "n_common"));
        if (f[2] != kMissingValue) e.rho = parse_real(f[2], "spearman_rho");
        if (f[3] != kMissingValue) e.p_value = parse_real(f[3], "p_value");
        out.push_back(std::move(e));
    }
    return out;
}

void write_calibration_json(std::ostream& out, std::span<const CalibrationReport> reports) {
    ojson arr = ojson::array();
    for (const auto& r : reports) {
        ojson j;
        j["kind"] = to_string(r.kind);
        j["n"] = r.n;
        j["qwk"] = r.qwk;
        j["nmae"] = r.nmae;
        j["agreement"] = r.agreement;
        arr.push_back(std::move(j));
    }
    out << arr.dump(2) << '\n';
}

std::vector<CalibrationReport> read_calibration_json(std::istream& in) {
    json arr = json::parse(in, nullptr, false);
    if (!arr.is_array()) throw IoError("calibration report must be a JSON array");
    std::vector<CalibrationReport> out;
    for (const auto& j : arr) {
        out.push_back(CalibrationReport{parse_kind(j.at("kind").get<std::string>()), j.at("n").get<std::size_t>(),
                                        j.at("qwk").get<double>(), j.at("nmae").get<double>(),
                                        j.value("agreement", std::string{})});
    }
    return out;
}

void write_diagnostics_jsonl(std::ostream& out, std::span<const Diagnostic> rows) {
    for (const auto& d : rows) {
        ojson j;
        j["stage"] = d.stage;
        j["subreddit"] = d.subreddit;
        j["user"] = d.user;
        j["message"] = d.message;
        out << j.dump() << '\n';
    }
}

std::vector<CalibrationSample> read_calibration_labels(std::istream& in) {
    std::vector<CalibrationSample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        try {
            if (j.is_discarded()) throw DomainError("not JSON");
            out.push_back(CalibrationSample{ScoreLevel::from_value(j.at("human").get<double>()),
                                            ScoreLevel::from_value(j.at("ai").get<double>()),
                                            parse_kind(j.at("kind").get<std::string>())});
        } catch (const std::exception& e) {
            throw DomainError(fmt::format("labels line {}: {}", line_no, e.what()));
        }
    }
    if (in.bad()) throw IoError("read failure in labels file");
    return out;
}

std::vector<CalibrationReport> calibrate(std::span<const CalibrationSample> samples) {
    std::vector<CalibrationReport> out;
    for (ScoreKind kind : {ScoreKind::Support, ScoreKind::Alignment}) {
        std::vector<CalibrationSample> subset;
        for (const auto& s : samples) {
            if (s.kind == kind) subset.push_back(s);
        }
        if (subset.empty()) continue;
        const double qwk = quadratic_weighted_kappa(subset);
        out.push_back(CalibrationReport{kind, subset.size(), qwk, normalized_mae(subset), agreement_band(qwk)});
    }
    return out;
}

} // namespace gravwell
