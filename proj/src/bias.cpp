#include "gravwell/bias.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_set>

#include <fmt/format.h>

#include "gravwell/hashing.hpp"

namespace gravwell {

namespace {

void check_unit(double x, const char* name) {
    if (!(std::abs(x) <= 1.0)) {
        throw DomainError(fmt::format("otimes argument {} = {} outside [-1, 1]", name, x));
    }
}

std::vector<PairAlignment> sorted_checked(std::size_t n, std::span<const PairAlignment> alignments) {
    std::vector<PairAlignment> pairs(alignments.begin(), alignments.end());
    for (const auto& p : pairs) {
        if (!(p.i < p.j && p.j < n)) {
            throw DomainError(fmt::format("invalid pair ({}, {}) for {} supports", p.i, p.j, n));
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const PairAlignment& a, const PairAlignment& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    return pairs;
}

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t range) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % range;
    for (;;) {
        const std::uint64_t x = rng();
        if (x < limit) return x % range;
    }
}

template <typename Kernel>
UnweightedBias fold_mean(std::span<const ScoreLevel> supports, std::span<const PairAlignment> alignments,
                         Kernel kernel) {
    if (supports.size() < 2 || alignments.empty()) return {};
    const auto pairs = sorted_checked(supports.size(), alignments);

    std::vector<double> sup(supports.size());
    for (std::size_t k = 0; k < supports.size(); ++k) sup[k] = supports[k].value();
    std::vector<kernels::PairIndex> idx(pairs.size());
    std::vector<double> align(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        idx[k] = {pairs[k].i, pairs[k].j};
        align[k] = pairs[k].alignment.value();
    }
    std::vector<double> contrib(pairs.size());
    kernel(std::span<const double>(sup), std::span<const kernels::PairIndex>(idx), std::span<const double>(align),
           std::span<double>(contrib));

    double sum = 0.0;
    for (double c : contrib) sum += c; // fixed (i, j) order
    double mean = sum / static_cast<double>(pairs.size());
    mean = std::clamp(mean, -1.0, 1.0);
    return {mean, pairs.size()};
}

} // namespace

double otimes(double a, double b) {
    check_unit(a, "a");
    check_unit(b, "b");
    return kernels::otimes_unchecked(a, b);
}

double pair_contribution(ScoreLevel support_i, ScoreLevel support_j, ScoreLevel alignment_ij) {
    return otimes(otimes(support_i.value(), support_j.value()), alignment_ij.value());
}

UnweightedBias bias_unweighted(std::span<const ScoreLevel> supports,
                               std::span<const PairAlignment> alignments) {
    return fold_mean(supports, alignments, [](auto s, auto p, auto a, auto o) {
        kernels::omp::pair_contributions(s, p, a, o);
    });
}

UnweightedBias bias_unweighted_reference(std::span<const ScoreLevel> supports,
                                         std::span<const PairAlignment> alignments) {
    return fold_mean(supports, alignments, [](auto s, auto p, auto a, auto o) {
        kernels::serial::pair_contributions(s, p, a, o);
    });
}

std::vector<PairContribution> pair_contributions(std::span<const ScoreLevel> supports,
                                                 std::span<const PairAlignment> alignments) {
    std::vector<PairContribution> out;
    for (const auto& p : sorted_checked(supports.size(), alignments)) {
        out.push_back(PairContribution{p.i, p.j, supports[p.i], supports[p.j], p.alignment,
                                       pair_contribution(supports[p.i], supports[p.j], p.alignment)});
    }
    return out;
}

double normalize_bias(double m_unweighted, std::size_t n, std::size_t pair_count) {
    if (!(std::abs(m_unweighted) <= 1.0)) {
        throw DomainError(fmt::format("m_unweighted = {} outside [-1, 1]", m_unweighted));
    }
    if (n < 2 || pair_count == 0) return 1.0;
    return 1.25 + 0.75 * m_unweighted;
}

std::vector<kernels::PairIndex> select_pairs(std::size_t n, std::optional<std::size_t> cap,
                                             std::uint64_t seed) {
    std::vector<kernels::PairIndex> out;
    if (n < 2) return out;
    const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;

    if (!cap || *cap >= total) {
        out.reserve(total);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) out.push_back({i, j});
        }
        return out;
    }

    // Floyd's sampling over linear pair indices.
    std::mt19937_64 rng(seed);
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(*cap * 2);
    for (std::uint64_t j = total - *cap; j < total; ++j) {
        const std::uint64_t t = bounded(rng, j + 1);
        if (!chosen.insert(t).second) chosen.insert(j);
    }
    std::vector<std::uint64_t> linear(chosen.begin(), chosen.end());
    std::sort(linear.begin(), linear.end());

    // Row i covers linear indices [row_start, row_start + n - 1 - i).
    out.reserve(linear.size());
    std::size_t i = 0;
    std::uint64_t row_start = 0;
    for (std::uint64_t L : linear) {
        while (L >= row_start + (n - 1 - i)) {
            row_start += n - 1 - i;
            ++i;
        }
        out.push_back({i, i + 1 + static_cast<std::size_t>(L - row_start)});
    }
    return out;
}

std::uint64_t user_seed(std::uint64_t run_seed, const std::string& user, const std::string& subreddit) {
    return splitmix64(run_seed ^ fnv1a64(user + '\x1f' + subreddit));
}

Prompt support_prompt(const UserHistory& history, std::size_t entry) {
    return build_support_prompt(history.entries.at(entry).context);
}

Prompt alignment_prompt(const UserHistory& history, std::size_t first, std::size_t second) {
    return build_alignment_prompt(history.entries.at(first).context, history.entries.at(second).context);
}

std::vector<std::size_t> scoreable_entries(std::span<const std::optional<ScoreLevel>> supports) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < supports.size(); ++k) {
        if (supports[k]) out.push_back(k);
    }
    return out;
}

BiasScore finalize_bias(const UserHistory& history, std::span<const std::optional<ScoreLevel>> supports,
                        std::span<const kernels::PairIndex> pairs,
                        std::span<const std::optional<ScoreLevel>> alignments) {
    if (supports.size() != history.entries.size() || pairs.size() != alignments.size()) {
        throw DomainError("finalize_bias: inconsistent input sizes");
    }
    BiasScore out;
    out.user = history.user;
    out.subreddit = history.subreddit;

    const auto ok = scoreable_entries(supports);
    out.n = ok.size();
    out.failures = supports.size() - ok.size();

    std::vector<ScoreLevel> levels;
    levels.reserve(ok.size());
    for (auto k : ok) levels.push_back(*supports[k]);

    std::vector<PairAlignment> scored;
    scored.reserve(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (alignments[k]) {
            scored.push_back({pairs[k].i, pairs[k].j, *alignments[k]});
        } else {
            ++out.failures;
        }
    }

    const auto ub = bias_unweighted(levels, scored);
    out.m_unweighted = ub.m_unweighted;
    out.pair_count = ub.pair_count;
    out.m_a = normalize_bias(ub.m_unweighted, out.n, ub.pair_count);
    return out;
}

BiasScore compute_user_bias(const UserHistory& history, ScorerBackend& backend, ScoreCache& cache,
                            const BiasOptions& options) {
    const auto sup = score_batch(
        history.entries.size(), [&](std::size_t k) { return support_prompt(history, k); }, backend,
        cache, options.retry);

    const auto ok = scoreable_entries(sup.levels);
    const auto pairs = select_pairs(ok.size(), options.pair_cap, options.seed);
    const auto align = score_batch(
        pairs.size(),
        [&](std::size_t k) { return alignment_prompt(history, ok[pairs[k].i], ok[pairs[k].j]); },
        backend, cache, options.retry);

    return finalize_bias(history, sup.levels, pairs, align.levels);
}

} // namespace gravwell
