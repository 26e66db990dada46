#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "gravwell/metrics.hpp"
#include "gravwell/ranking.hpp"
#include "table1.hpp"
#include "test_util.hpp"

using namespace gravwell;
using gravwell::testing::lv;

namespace {

CalibrationSample cs(double h, double a, ScoreKind k = ScoreKind::Support) { return {lv(h), lv(a), k}; }

// O/E confusion-matrix kappa written out cell by cell.
double qwk_oracle(const std::vector<CalibrationSample>& s) {
    double O[5][5] = {};
    for (const auto& x : s) O[x.human.ordinal()][x.ai.ordinal()] += 1;
    double rows[5] = {}, cols[5] = {}, N = 0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) rows[i] += O[i][j], cols[j] += O[i][j], N += O[i][j];
    double num = 0, den = 0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            const double w = (i - j) * (i - j) / 16.0;
            num += w * O[i][j];
            den += w * rows[i] * cols[j] / N;
        }
    return den == 0 ? 1.0 : 1.0 - num / den;
}

} // namespace

TEST(Ranks, AverageTies) {
    const std::vector<double> v{3, 1, 3, 2};
    EXPECT_EQ(average_ranks(v), (std::vector<double>{3.5, 1, 3.5, 2}));
}

TEST(Spearman, Examples) {
    const std::vector<double> a{1, 2, 3}, b{3, 2, 1}, c{2, 1, 3};
    EXPECT_EQ(spearman_rho(a, a), 1.0);
    EXPECT_EQ(spearman_rho(a, b), -1.0);
    EXPECT_DOUBLE_EQ(spearman_rho(a, c), 0.5);
    const std::vector<double> flat{1, 1, 1};
    EXPECT_THROW(spearman_rho(a, flat), UndefinedStatistic);
}

TEST(Spearman, MatchesByItemId) {
    RankSeries p{{{"a", 1}, {"b", 2}, {"c", 3}}};
    RankSeries q{{{"c", 3}, {"a", 1}, {"b", 2}}};
    EXPECT_EQ(spearman_rho(p, q), 1.0);
}

TEST(PValue, SymmetricNullAndEndpoints) {
    EXPECT_NEAR(spearman_p_value(0, 100), 0.5, 1e-15);
    EXPECT_EQ(spearman_p_value(1, 10), 0.0);
    EXPECT_EQ(spearman_p_value(-1, 10), 1.0);
    EXPECT_THROW(spearman_p_value(0.5, 2), DomainError);
    EXPECT_THROW(spearman_p_value(1.5, 10), DomainError);
}

TEST(PValue, PublishedAnchors) {
    EXPECT_NEAR(spearman_p_value(0.02445433064, 5951), 0.029623, 1e-3);
    EXPECT_NEAR(spearman_p_value(-0.006313627858, 34473), 0.879445, 1e-3);
    const double sanders = spearman_p_value(0.07124278034, 5558);
    EXPECT_GT(sanders, 1e-8);
    EXPECT_LT(sanders, 1e-7);
}

TEST(PValue, AllPublishedRows) {
    for (const auto& r : gravwell::testing::kPublishedRows) {
        EXPECT_NEAR(spearman_p_value(r.rho, r.n), r.p, 2e-3) << r.subreddit;
    }
}

TEST(IncompleteBeta, MatchesBoost) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> ab(0.2, 3000.0), xs(0.0, 1.0);
    for (int k = 0; k < 2000; ++k) {
        const double a = ab(rng), b = (k % 2) ? 0.5 : ab(rng) / 100 + 0.1, x = xs(rng);
        const double want = boost::math::ibeta(a, b, x);
        EXPECT_NEAR(regularized_incomplete_beta(a, b, x), want, 1e-12 + 1e-10 * want) << a << " " << b << " " << x;
    }
    EXPECT_EQ(regularized_incomplete_beta(2, 3, 0), 0.0);
    EXPECT_EQ(regularized_incomplete_beta(2, 3, 1), 1.0);
    EXPECT_THROW(regularized_incomplete_beta(-1, 3, 0.5), DomainError);
}

TEST(StudentT, MatchesBoost) {
    for (double df : {1.0, 2.5, 10.0, 82.0, 5000.0, 34471.0}) {
        boost::math::students_t dist(df);
        for (double t : {-4.0, -1.0, -0.1, 0.0, 0.3, 1.7, 3.0, 8.0}) {
            const double want = boost::math::cdf(boost::math::complement(dist, t));
            EXPECT_NEAR(student_t_sf(t, df), want, 1e-12 + 1e-9 * want) << df << " " << t;
        }
    }
}

TEST(Kappa, Examples) {
    std::vector<CalibrationSample> agree{cs(1, 1), cs(0, 0), cs(-0.5, -0.5)};
    EXPECT_EQ(quadratic_weighted_kappa(agree), 1.0);
    EXPECT_EQ(normalized_mae(agree), 0.0);

    std::vector<CalibrationSample> swapped{cs(-1, 1), cs(1, -1)};
    EXPECT_NEAR(quadratic_weighted_kappa(swapped), qwk_oracle(swapped), 1e-15);
    EXPECT_EQ(quadratic_weighted_kappa(swapped), -1.0);

    std::vector<CalibrationSample> grid;
    for (double h : ScoreLevel::kValues)
        for (double a : ScoreLevel::kValues) grid.push_back(cs(h, a));
    EXPECT_NEAR(quadratic_weighted_kappa(grid), 0.0, 1e-15);
}

TEST(Kappa, MatchesOracleOnRandomSets) {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 50; ++t) {
        std::vector<CalibrationSample> s;
        const std::size_t n = 5 + rng() % 60;
        for (std::size_t k = 0; k < n; ++k) {
            s.push_back({ScoreLevel::from_ordinal(static_cast<int>(rng() % 5)),
                         ScoreLevel::from_ordinal(static_cast<int>(rng() % 5)), ScoreKind::Alignment});
        }
        EXPECT_NEAR(quadratic_weighted_kappa(s), qwk_oracle(s), 1e-12);
    }
}

TEST(Nmae, Examples) {
    std::vector<CalibrationSample> s{cs(1, 0.5), cs(0.5, 0.5)};
    EXPECT_DOUBLE_EQ(normalized_mae(s), 0.125);
    std::vector<CalibrationSample> worst{cs(-1, 1), cs(1, -1)};
    EXPECT_EQ(normalized_mae(worst), 1.0);
}

TEST(Bands, Boundaries) {
    EXPECT_EQ(agreement_band(0.1), "slight");
    EXPECT_EQ(agreement_band(0.35), "fair");
    EXPECT_EQ(agreement_band(0.57), "moderate");
    EXPECT_EQ(agreement_band(0.7), "substantial");
    EXPECT_EQ(agreement_band(0.8), "substantial");
    EXPECT_EQ(agreement_band(0.81), "near-perfect");
    EXPECT_EQ(agreement_band(0.4), "moderate");
}

TEST(Evaluate, DisjointUsers) {
    RankSeries p{{{"a", 1}, {"b", 2}}}, q{{{"c", 1}, {"d", 2}}};
    const auto e = evaluate_subreddit("s", p, q);
    EXPECT_EQ(e.n_common, 0u);
    EXPECT_FALSE(e.rho);
    EXPECT_FALSE(e.note.empty());
}

TEST(Evaluate, IdenticalRankings) {
    RankSeries p;
    for (int k = 1; k <= 5; ++k) p.items.emplace_back("u" + std::to_string(k), k);
    const auto e = evaluate_subreddit("s", p, p);
    EXPECT_EQ(e.n_common, 5u);
    EXPECT_EQ(*e.rho, 1.0);
    EXPECT_NEAR(*e.p_value, 0.0, 1e-12);
}

TEST(Evaluate, KnownPermutationOfTen) {
    const std::vector<int> perm{3, 1, 4, 10, 5, 9, 2, 6, 8, 7};
    RankSeries p, q;
    for (int k = 0; k < 10; ++k) {
        p.items.emplace_back("u" + std::to_string(k), k + 1);
        q.items.emplace_back("u" + std::to_string(k), perm[k]);
    }
    // extra users on one side only are ignored
    q.items.emplace_back("ghost", 11);
    const auto e = evaluate_subreddit("s", p, q);
    double d2 = 0;
    for (int k = 0; k < 10; ++k) d2 += (k + 1 - perm[k]) * (k + 1 - perm[k]);
    const double rho = 1 - 6 * d2 / (10.0 * (100 - 1));
    EXPECT_EQ(e.n_common, 10u);
    EXPECT_NEAR(*e.rho, rho, 1e-14);
    const double t = rho * std::sqrt(8 / (1 - rho * rho));
    EXPECT_NEAR(*e.p_value, boost::math::cdf(boost::math::complement(boost::math::students_t(8), t)), 1e-12);
}
