#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gravwell/types.hpp"

namespace gravwell {

// (item id, rank) pairs.
struct RankSeries {
    std::vector<std::pair<std::string, double>> items;

    std::size_t size() const noexcept { return items.size(); }
};

// Pearson correlation. Throws UndefinedStatistic for n < 2 or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation of two rank vectors given in the same item order.
double spearman_rho(std::span<const double> ranks_a, std::span<const double> ranks_b);

// Matches items by id; both series must contain the same item set.
double spearman_rho(const RankSeries& a, const RankSeries& b);

// I_x(a, b) by Lentz continued fraction. Throws DomainError outside
// a, b > 0, 0 <= x <= 1.
double regularized_incomplete_beta(double a, double b, double x);

// P(T_df > t) for Student's t.
double student_t_sf(double t, double df);

// One-sided (positive association) p-value for Spearman's rho with n items:
// t = rho sqrt((n - 2) / (1 - rho^2)), p = P(T_{n-2} > t). rho = 1 gives 0,
// rho = -1 gives 1. Throws DomainError for n < 3 or |rho| > 1.
double spearman_p_value(double rho, std::size_t n);

struct CalibrationSample {
    ScoreLevel human;
    ScoreLevel ai;
    ScoreKind kind = ScoreKind::Support;
};

// Quadratic-weighted kappa over the five ordinal levels, weights (i-j)^2/16.
// Returns 1 when the expected weighted disagreement is zero.
double quadratic_weighted_kappa(std::span<const CalibrationSample> samples);

// Mean |human - ai| / 2.
double normalized_mae(std::span<const CalibrationSample> samples);

// slight / fair / moderate / substantial / near-perfect
std::string agreement_band(double kappa);

struct SubredditEvaluation {
    std::string subreddit;
    std::size_t n_common = 0;
    std::optional<double> rho; // nullopt: insufficient data
    std::optional<double> p_value;
    std::string note;          // reason when rho is missing
};

inline constexpr std::size_t kMinCommonUsers = 3;

// Intersects the user sets, re-ranks both sides within the intersection and
// reports rho with its one-sided p-value. Fewer than three common users (or a
// constant ranking) is reported through `note`, never thrown.
SubredditEvaluation evaluate_subreddit(const std::string& subreddit, const RankSeries& predicted,
                                       const RankSeries& actual);

} // namespace gravwell
