#include "gravwell/gravity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>

#include "gravwell/hashing.hpp"
#include "gravwell/kernels.hpp"
#include "gravwell/ranking.hpp"

namespace gravwell {

double EmbeddingVector::norm() const noexcept {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

std::string MockEmbedder::model_id() const { return fmt::format("mock-embedder-v1-d{}", dim_); }

EmbeddingVector MockEmbedder::embed(const std::string& text) {
    calls_.fetch_add(1);
    EmbeddingVector v{std::vector<double>(dim_, 0.0)};
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        const std::uint64_t h = fnv1a64(token);
        const std::size_t slot = static_cast<std::size_t>(h % dim_);
        v.values[slot] += ((h >> 63) & 1U) ? -1.0 : 1.0;
        token.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            token.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    const double n = v.norm();
    if (n > 0.0) {
        for (double& x : v.values) x /= n;
    }
    return v;
}

CachedEmbedder::CachedEmbedder(Embedder& inner, std::optional<std::filesystem::path> cache_path)
    : inner_(inner),
      store_(cache_path ? std::make_unique<JsonlStore>(*cache_path) : std::make_unique<JsonlStore>()) {}

std::string CachedEmbedder::key_for(const std::string& text) const {
    return sha256_hex(inner_.model_id() + '\n' + text);
}

EmbeddingVector CachedEmbedder::embed(const std::string& text) {
    const std::string key = key_for(text);
    if (auto hit = store_->get(key)) {
        return EmbeddingVector{hit->at("vector").get<std::vector<double>>()};
    }
    backend_calls_.fetch_add(1);
    EmbeddingVector v = inner_.embed(text);
    nlohmann::json rec;
    rec["key"] = key;
    rec["model_id"] = inner_.model_id();
    rec["vector"] = v.values;
    store_->put(rec);
    return v;
}

std::vector<EmbeddingVector> CachedEmbedder::embed_all(std::span<const std::string> texts,
                                                       std::size_t max_in_flight) {
    // Unique texts first so concurrent workers never embed the same text twice.
    std::vector<std::string> unique;
    std::unordered_map<std::string, std::size_t> slot;
    for (const auto& t : texts) {
        if (slot.emplace(t, unique.size()).second) unique.push_back(t);
    }
    std::vector<EmbeddingVector> resolved(unique.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (std::size_t k = next.fetch_add(1); k < unique.size(); k = next.fetch_add(1)) {
            try {
                resolved[k] = embed(unique[k]);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min(std::max<std::size_t>(max_in_flight, 1), unique.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(resolved[slot.at(t)]);
    return out;
}

EmbeddingVector mean_embedding(std::span<const EmbeddingVector> vectors) {
    if (vectors.empty()) throw AnalysisError("mean of zero embeddings");
    const std::size_t dim = vectors.front().dim();
    EmbeddingVector out{std::vector<double>(dim, 0.0)};
    for (const auto& v : vectors) {
        if (v.dim() != dim) throw AnalysisError("embedding dimension mismatch");
        for (std::size_t k = 0; k < dim; ++k) out.values[k] += v.values[k];
    }
    for (double& x : out.values) x /= static_cast<double>(vectors.size());
    return out;
}

double subgroup_mass(std::span<const Comment> comments, const std::string& subreddit) {
    std::set<std::string_view> authors;
    for (const auto& c : comments) {
        if (c.subreddit == subreddit) authors.insert(c.author);
    }
    if (authors.empty()) throw AnalysisError("no users in subreddit " + subreddit);
    return static_cast<double>(authors.size());
}

std::vector<const Comment*> top_content(std::span<const Comment> comments, int top_k) {
    if (top_k < 1) throw DomainError("top_k must be >= 1");
    std::vector<const Comment*> all;
    all.reserve(comments.size());
    for (const auto& c : comments) all.push_back(&c);
    std::sort(all.begin(), all.end(), [](const Comment* a, const Comment* b) {
        if (a->engagement != b->engagement) return a->engagement > b->engagement;
        return a->id < b->id;
    });
    if (all.size() > static_cast<std::size_t>(top_k)) all.resize(static_cast<std::size_t>(top_k));
    return all;
}

namespace {

EmbeddingVector mean_of_nondegenerate(const std::vector<std::string>& texts, Embedder& embedder,
                                      const std::string& what) {
    std::vector<EmbeddingVector> vs;
    for (const auto& t : texts) {
        auto v = embedder.embed(t);
        if (v.norm() > 0.0) vs.push_back(std::move(v));
    }
    if (vs.empty()) throw AnalysisError("no embeddable content for " + what);
    return mean_embedding(vs);
}

} // namespace

EmbeddingVector subgroup_centroid(std::span<const Comment> comments, int top_k, Embedder& embedder) {
    std::vector<std::string> texts;
    for (const Comment* c : top_content(comments, top_k)) texts.push_back(c->body);
    return mean_of_nondegenerate(texts, embedder, "subgroup centroid");
}

EmbeddingVector user_embedding(const UserHistory& history, Embedder& embedder) {
    if (history.entries.empty()) throw AnalysisError("empty history for user " + history.user);
    std::vector<std::string> texts;
    for (const auto& e : history.entries) texts.push_back(e.context.message.body);
    return mean_of_nondegenerate(texts, embedder, "user " + history.user);
}

double ideological_distance(const EmbeddingVector& u, const EmbeddingVector& g, double eps) {
    if (u.dim() != g.dim()) {
        throw DomainError(fmt::format("embedding dims differ: {} vs {}", u.dim(), g.dim()));
    }
    if (u.norm() == 0.0 || g.norm() == 0.0) throw DomainError("zero-norm embedding");
    double d = 0.0;
    kernels::serial::cosine_distances(u.values, u.dim(), g.values, eps, std::span<double>(&d, 1));
    return d;
}

namespace {

void check_model(const SubgroupModel& m) {
    if (!(m.mass > 0.0) || !(m.tm > 0.0) || !(m.tsm > 0.0)) {
        throw DomainError(fmt::format("subgroup {} needs positive mass/tm/tsm", m.subreddit));
    }
}

void check_user(double m_user, double d) {
    if (!(m_user > 0.0) || !std::isfinite(m_user)) {
        throw DomainError(fmt::format("m_user must be positive, got {}", m_user));
    }
    if (!(d > 0.0) || !std::isfinite(d)) throw DomainError(fmt::format("d must be positive, got {}", d));
}

} // namespace

PullForce pull_force(const SubgroupModel& model, const std::string& user, double m_user, double d) {
    check_model(model);
    check_user(m_user, d);
    const double scale = model.mass * model.tm * model.tsm;
    return PullForce{user, model.subreddit, m_user, d, scale * m_user / (d * d)};
}

std::vector<PullForce> pull_forces(const SubgroupModel& model, std::span<const std::string> users,
                                   std::span<const double> m_user, std::span<const double> d) {
    check_model(model);
    if (users.size() != m_user.size() || users.size() != d.size()) {
        throw DomainError("pull_forces: input sizes differ");
    }
    for (std::size_t k = 0; k < users.size(); ++k) check_user(m_user[k], d[k]);

    std::vector<double> f(users.size());
    kernels::omp::pull_forces(m_user, d, model.mass * model.tm * model.tsm, f);
    std::vector<PullForce> out;
    out.reserve(users.size());
    for (std::size_t k = 0; k < users.size(); ++k) {
        out.push_back(PullForce{users[k], model.subreddit, m_user[k], d[k], f[k]});
    }
    return out;
}

ExitDirection parse_exit_direction(const std::string& s) {
    if (s == "weakest-first" || s == "ascending") return ExitDirection::WeakestFirst;
    if (s == "strongest-first" || s == "descending") return ExitDirection::StrongestFirst;
    throw ConfigError("unknown exit direction: " + s + " (expected weakest-first or strongest-first)");
}

std::string to_string(ExitDirection d) {
    return d == ExitDirection::WeakestFirst ? "weakest-first" : "strongest-first";
}

std::vector<double> simulate_exit_order(std::span<const PullForce> forces, ExitDirection direction) {
    std::vector<double> keys;
    keys.reserve(forces.size());
    for (const auto& f : forces) keys.push_back(direction == ExitDirection::WeakestFirst ? f.f_w : -f.f_w);
    return average_ranks(keys);
}

} // namespace gravwell
