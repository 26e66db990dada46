#pragma once

// Per-user confirmation-bias mass.
//
// Each parent comment a user replied to carries the user's support for it
// (five-level). Every pair of parent contexts (i < j) also gets an alignment
// score for the two parents' opinions. A pair contributes
//
//     (support_i (x) support_j) (x) alignment_ij
//
// where a (x) b = ab(1 - ln|ab|) for ab != 0 and 0 otherwise. The operator
// keeps the product of two Uniform[-1, 1] variables uniform on [-1, 1]
// (x(1 - ln x) is the CDF of a product of two Uniform[0, 1] variables), and
// it is not associative, so the chain is folded left to right.
//
// The mean contribution m_unweighted in [-1, 1] is mapped to
// m_a = 1.25 + 0.75 m_unweighted in [0.5, 2]. Users without any scored pair
// get the neutral m_a = 1.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gravwell/ingest.hpp"
#include "gravwell/kernels.hpp"
#include "gravwell/scoring.hpp"

namespace gravwell {

// Throws DomainError if |a| > 1 or |b| > 1 (or either is NaN).
double otimes(double a, double b);

double pair_contribution(ScoreLevel support_i, ScoreLevel support_j, ScoreLevel alignment_ij);

struct PairAlignment {
    std::size_t i = 0;
    std::size_t j = 0;
    ScoreLevel alignment;
};

struct PairContribution {
    std::size_t i = 0;
    std::size_t j = 0;
    ScoreLevel support_i;
    ScoreLevel support_j;
    ScoreLevel alignment;
    double contribution = 0.0;
};

struct UnweightedBias {
    double m_unweighted = 0.0;
    std::size_t pair_count = 0;
};

// Mean pair contribution over `alignments` (pairs with i < j < supports.size()).
// Fewer than two supports, or no pairs, yields the {0, 0} sentinel. The sum
// runs in ascending (i, j) order regardless of input order.
UnweightedBias bias_unweighted(std::span<const ScoreLevel> supports,
                               std::span<const PairAlignment> alignments);

// Serial reference for bias_unweighted.
UnweightedBias bias_unweighted_reference(std::span<const ScoreLevel> supports,
                                         std::span<const PairAlignment> alignments);

std::vector<PairContribution> pair_contributions(std::span<const ScoreLevel> supports,
                                                 std::span<const PairAlignment> alignments);

// 1.25 + 0.75 m when pair_count > 0, else exactly 1. `n` is the number of
// scoreable parent contexts; n < 2 always takes the neutral branch.
double normalize_bias(double m_unweighted, std::size_t n, std::size_t pair_count);

struct BiasScore {
    std::string user;
    std::string subreddit;
    std::size_t n = 0;
    std::size_t pair_count = 0;
    double m_unweighted = 0.0;
    double m_a = 1.0;
    std::size_t failures = 0; // unscorable supports + unscorable pairs

    friend bool operator==(const BiasScore&, const BiasScore&) = default;
};

struct BiasOptions {
    std::optional<std::size_t> pair_cap; // sample this many pairs when set
    std::uint64_t seed = 0;
    RetryPolicy retry;
};

// All i < j pairs of n items, or a uniform sample of `cap` of them drawn
// with a generator seeded from `seed`. Always sorted by (i, j).
std::vector<kernels::PairIndex> select_pairs(std::size_t n, std::optional<std::size_t> cap,
                                             std::uint64_t seed);

// Per-user seed derived from the run seed, so that sampling does not depend
// on the order users are processed in.
std::uint64_t user_seed(std::uint64_t run_seed, const std::string& user,
                        const std::string& subreddit);

Prompt support_prompt(const UserHistory& history, std::size_t entry);
Prompt alignment_prompt(const UserHistory& history, std::size_t first, std::size_t second);

// Indices of entries whose support was scored.
std::vector<std::size_t> scoreable_entries(std::span<const std::optional<ScoreLevel>> supports);

// Builds the final score from per-entry supports (nullopt = failed) and
// alignments resolved for `pairs` over the *scoreable* entries.
BiasScore finalize_bias(const UserHistory& history, std::span<const std::optional<ScoreLevel>> supports,
                        std::span<const kernels::PairIndex> pairs,
                        std::span<const std::optional<ScoreLevel>> alignments);

// Scores every entry's support, then alignment for every (possibly sampled)
// pair of scoreable entries, then folds. Per-pair failures are skipped and
// counted; configuration errors propagate.
BiasScore compute_user_bias(const UserHistory& history, ScorerBackend& backend, ScoreCache& cache,
                            const BiasOptions& options);

} // namespace gravwell
