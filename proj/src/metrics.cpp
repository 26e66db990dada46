#include "gravwell/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "gravwell/ranking.hpp"

namespace gravwell {

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw UndefinedStatistic("correlation needs at least two items");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("correlation undefined for constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman_rho(std::span<const double> ranks_a, std::span<const double> ranks_b) {
    return pearson(ranks_a, ranks_b);
}

double spearman_rho(const RankSeries& a, const RankSeries& b) {
    std::map<std::string, double> rb;
    for (const auto& [id, r] : b.items) rb[id] = r;
    if (rb.size() != a.size() || b.size() != a.size()) {
        throw DomainError("spearman_rho: series cover different items");
    }
    std::vector<double> xa, xb;
    for (const auto& [id, r] : a.items) {
        auto it = rb.find(id);
        if (it == rb.end()) throw DomainError("spearman_rho: item missing from second series: " + id);
        xa.push_back(r);
        xb.push_back(it->second);
    }
    return spearman_rho(xa, xb);
}

namespace {

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 10000;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw Error(fmt::format("incomplete beta continued fraction did not converge (a={}, b={}, x={})", a, b, x));
}

} // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete beta needs a, b > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta needs 0 <= x <= 1");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                             b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_sf(double t, double df) {
    if (!(df > 0.0)) throw DomainError("student_t_sf needs df > 0");
    if (std::isnan(t)) throw DomainError("student_t_sf: t is NaN");
    if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
    // P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2)
    const double x = df / (df + t * t);
    const double two_sided = regularized_incomplete_beta(0.5 * df, 0.5, x);
    return t > 0 ? 0.5 * two_sided : 1.0 - 0.5 * two_sided;
}

double spearman_p_value(double rho, std::size_t n) {
    if (n < 3) throw DomainError("spearman p-value needs n >= 3");
    if (!(std::abs(rho) <= 1.0)) throw DomainError(fmt::format("rho = {} outside [-1, 1]", rho));
    if (rho == 1.0) return 0.0;
    if (rho == -1.0) return 1.0;
    const double df = static_cast<double>(n - 2);
    const double t = rho * std::sqrt(df / (1.0 - rho * rho));
    return student_t_sf(t, df);
}

double quadratic_weighted_kappa(std::span<const CalibrationSample> samples) {
    if (samples.empty()) throw DomainError("quadratic weighted kappa of no samples");
    std::array<std::array<double, 5>, 5> observed{};
    std::array<double, 5> rows{}, cols{};
    for (const auto& s : samples) {
        observed[s.human.ordinal()][s.ai.ordinal()] += 1.0;
        rows[s.human.ordinal()] += 1.0;
        cols[s.ai.ordinal()] += 1.0;
    }
    const double n = static_cast<double>(samples.size());
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            const double w = static_cast<double>((i - j) * (i - j)) / 16.0;
            num += w * observed[i][j];
            den += w * rows[i] * cols[j] / n;
        }
    }
    if (den == 0.0) return 1.0;
    return 1.0 - num / den;
}

double normalized_mae(std::span<const CalibrationSample> samples) {
    if (samples.empty()) throw DomainError("normalized MAE of no samples");
    double sum = 0.0;
    for (const auto& s : samples) sum += std::abs(s.human.value() - s.ai.value());
    return sum / static_cast<double>(samples.size()) / 2.0;
}

std::string agreement_band(double kappa) {
    if (kappa < 0.2) return "slight";
    if (kappa < 0.4) return "fair";
    if (kappa < 0.6) return "moderate";
    if (kappa <= 0.8) return "substantial";
    return "near-perfect";
}

SubredditEvaluation evaluate_subreddit(const std::string& subreddit, const RankSeries& predicted,
                                       const RankSeries& actual) {
    SubredditEvaluation out;
    out.subreddit = subreddit;

    std::map<std::string, double> act;
    for (const auto& [id, r] : actual.items) act[id] = r;
    std::map<std::string, std::pair<double, double>> common;
    for (const auto& [id, r] : predicted.items) {
        if (auto it = act.find(id); it != act.end()) common[id] = {r, it->second};
    }
    out.n_common = common.size();
    if (out.n_common < kMinCommonUsers) {
        out.note = "insufficient data";
        return out;
    }

    std::vector<double> kp, ka;
    for (const auto& [id, v] : common) {
        kp.push_back(v.first);
        ka.push_back(v.second);
    }
    const auto rp = average_ranks(kp);
    const auto ra = average_ranks(ka);
    try {
        const double rho = spearman_rho(rp, ra);
        out.rho = rho;
        out.p_value = spearman_p_value(rho, out.n_common);
    } catch (const UndefinedStatistic&) {
        out.note = "constant ranking";
    }
    return out;
}

} // namespace gravwell
