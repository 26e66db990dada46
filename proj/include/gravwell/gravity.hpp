#pragma once

// Gravity-well pull of a subreddit on a user:
//
//     F_w = m_subgroup * m_user * TM * TSM / d^2
//
// with m_subgroup the number of distinct authors, m_user the user's bias mass,
// TM / TSM platform and topic modifiers and d the cosine distance between the
// user's content centroid and the subgroup's top-content centroid.

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gravwell/ingest.hpp"
#include "gravwell/jsonl_store.hpp"

namespace gravwell {

inline constexpr double kDistanceEpsilon = 1e-6;
inline constexpr int kDefaultTopK = 25;
inline constexpr std::size_t kMockEmbeddingDim = 64;

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const noexcept { return values.size(); }
    double norm() const noexcept;

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::string model_id() const = 0;
    virtual EmbeddingVector embed(const std::string& text) = 0;
};

// Hashed bag of lower-cased alphanumeric tokens, unit-normalized. Text with
// no tokens embeds to the zero vector.
class MockEmbedder final : public Embedder {
public:
    explicit MockEmbedder(std::size_t dim = kMockEmbeddingDim) : dim_(dim) {}
    std::string model_id() const override;
    EmbeddingVector embed(const std::string& text) override;
    std::size_t calls() const noexcept { return calls_.load(); }

private:
    std::size_t dim_;
    std::atomic<std::size_t> calls_{0};
};

// Cache-first wrapper; the cache is keyed on (model id, text).
class CachedEmbedder final : public Embedder {
public:
    CachedEmbedder(Embedder& inner, std::optional<std::filesystem::path> cache_path = std::nullopt);

    std::string model_id() const override { return inner_.model_id(); }
    EmbeddingVector embed(const std::string& text) override;

    // Embeds all texts with at most `max_in_flight` concurrent backend calls.
    std::vector<EmbeddingVector> embed_all(std::span<const std::string> texts, std::size_t max_in_flight);

    std::size_t backend_calls() const noexcept { return backend_calls_.load(); }

private:
    std::string key_for(const std::string& text) const;

    Embedder& inner_;
    std::unique_ptr<JsonlStore> store_;
    std::atomic<std::size_t> backend_calls_{0};
};

// Component-wise mean; throws AnalysisError on empty input or mixed dims.
EmbeddingVector mean_embedding(std::span<const EmbeddingVector> vectors);

// Distinct authors of `subreddit`. Throws AnalysisError when there are none.
double subgroup_mass(std::span<const Comment> comments, const std::string& subreddit);

// Top `top_k` comments by engagement (ties by id ascending).
std::vector<const Comment*> top_content(std::span<const Comment> comments, int top_k);

// Mean embedding of the top_k bodies, skipping zero-norm embeddings. Throws
// AnalysisError if nothing embeddable remains.
EmbeddingVector subgroup_centroid(std::span<const Comment> comments, int top_k, Embedder& embedder);

// Mean embedding of the user's own message bodies. Throws AnalysisError for
// an empty history or when no message is embeddable.
EmbeddingVector user_embedding(const UserHistory& history, Embedder& embedder);

// max(eps, 1 - cos(u, g)), at most 2. Throws DomainError on dimension
// mismatch or a zero-norm vector.
double ideological_distance(const EmbeddingVector& u, const EmbeddingVector& g,
                            double eps = kDistanceEpsilon);

struct SubgroupModel {
    std::string subreddit;
    double mass = 1.0;
    EmbeddingVector centroid;
    double tm = 1.0;
    double tsm = 1.0;
    int top_k = kDefaultTopK;
};

struct PullForce {
    std::string user;
    std::string subreddit;
    double m_user = 1.0;
    double d = 1.0;
    double f_w = 0.0;
};

// Throws DomainError on nonpositive mass, modifiers, m_user or d.
PullForce pull_force(const SubgroupModel& model, const std::string& user, double m_user, double d);

// Batched form over many users of one subgroup (OpenMP kernel).
std::vector<PullForce> pull_forces(const SubgroupModel& model, std::span<const std::string> users,
                                   std::span<const double> m_user, std::span<const double> d);

enum class ExitDirection {
    WeakestFirst,  // low pull exits first (default)
    StrongestFirst // high pull exits first
};

ExitDirection parse_exit_direction(const std::string& s);
std::string to_string(ExitDirection d);

// Predicted exit ranks aligned with `forces`; rank 1 exits first, exact ties
// share the average rank.
std::vector<double> simulate_exit_order(std::span<const PullForce> forces,
                                        ExitDirection direction = ExitDirection::WeakestFirst);

} // namespace gravwell
