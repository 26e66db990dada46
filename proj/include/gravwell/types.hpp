#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gravwell/error.hpp"

namespace gravwell {

// One platform comment or post.
struct Comment {
    std::string id;
    std::optional<std::string> parent_id; // absent for thread roots
    std::string thread_id;
    std::string author;
    std::string subreddit;
    std::int64_t created_utc = 0;
    std::string body;
    std::int64_t engagement = 0;

    friend bool operator==(const Comment&, const Comment&) = default;
};

// (message, parent, ancestors) triple handed to the scorers. Ancestors are
// oldest-first and may be truncated.
struct CommentContext {
    Comment message;
    Comment parent;
    std::vector<Comment> ancestors;

    friend bool operator==(const CommentContext&, const CommentContext&) = default;
};

// Five-valued discrete score {-1, -0.5, 0, 0.5, 1}, stored as half steps in
// [-2, 2] so that nothing off the grid is representable.
class ScoreLevel {
public:
    static constexpr std::array<double, 5> kValues{-1.0, -0.5, 0.0, 0.5, 1.0};

    constexpr ScoreLevel() = default;

    // Throws DomainError unless `half_steps` is in [-2, 2].
    static constexpr ScoreLevel from_half_steps(int half_steps) {
        if (half_steps < -2 || half_steps > 2) {
            throw DomainError("score level half-steps out of range: " + std::to_string(half_steps));
        }
        return ScoreLevel(static_cast<std::int8_t>(half_steps));
    }

    // Exact conversion; throws DomainError for anything not on the grid.
    static ScoreLevel from_value(double v) {
        for (int h = -2; h <= 2; ++h) {
            if (v == 0.5 * h) return ScoreLevel(static_cast<std::int8_t>(h));
        }
        throw DomainError("value is not a score level: " + std::to_string(v));
    }

    // Ordinal category 0..4 (-1 -> 0, 1 -> 4).
    static constexpr ScoreLevel from_ordinal(int ordinal) { return from_half_steps(ordinal - 2); }

    constexpr double value() const noexcept { return 0.5 * half_steps_; }
    constexpr int half_steps() const noexcept { return half_steps_; }
    constexpr int ordinal() const noexcept { return half_steps_ + 2; }

    friend constexpr bool operator==(ScoreLevel, ScoreLevel) = default;
    friend constexpr auto operator<=>(ScoreLevel, ScoreLevel) = default;

private:
    constexpr explicit ScoreLevel(std::int8_t h) : half_steps_(h) {}
    std::int8_t half_steps_ = 0;
};

inline constexpr std::array<ScoreLevel, 5> all_score_levels() {
    return {ScoreLevel::from_half_steps(-2), ScoreLevel::from_half_steps(-1),
            ScoreLevel::from_half_steps(0), ScoreLevel::from_half_steps(1),
            ScoreLevel::from_half_steps(2)};
}

enum class ScoreKind { Support, Alignment };

inline const char* to_string(ScoreKind k) { return k == ScoreKind::Support ? "support" : "alignment"; }

} // namespace gravwell
