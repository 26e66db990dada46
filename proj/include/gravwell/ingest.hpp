#pragma once

// Comment dump parsing, thread reconstruction, per-user parent-context
// extraction and observed exit orders.

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "gravwell/types.hpp"

namespace gravwell {

inline constexpr int kDefaultMaxAncestors = 10;

struct ParseResult {
    std::vector<Comment> comments;
    std::size_t malformed = 0;  // lines that were not valid comment objects
    std::size_t dropped = 0;    // deleted authors / removed bodies
    std::size_t duplicates = 0; // repeated ids after the first occurrence
};

// Parses a JSON Lines stream. Bad lines are counted, never fatal. Throws
// IoError if the stream itself fails.
ParseResult parse_comments(std::istream& in);
ParseResult parse_comments_file(const std::string& path);

// Strips reddit fullname prefixes ("t1_", "t3_", ...).
std::string strip_type_prefix(std::string_view id);

nlohmann::json to_json(const Comment& c);
std::string serialize_comment(const Comment& c); // one JSON line, no newline

// Thread index over an immutable comment set. Comments are held in
// (created_utc, id) order so the index does not depend on input order.
class ThreadIndex {
public:
    // Throws CorpusError on duplicate ids or parent cycles.
    static ThreadIndex build(std::vector<Comment> comments);

    std::span<const Comment> comments() const noexcept { return comments_; }
    const Comment* find(std::string_view id) const;
    const Comment* parent_of(const Comment& c) const;

    // Children of `id`, chronological.
    std::vector<const Comment*> children(std::string_view id) const;

    // thread_id -> comment positions, chronological.
    const std::map<std::string, std::vector<std::size_t>>& threads() const noexcept {
        return threads_;
    }

    // Non-root comment whose parent is missing from the corpus.
    bool is_orphan(std::string_view id) const;
    std::size_t orphan_count() const noexcept;

    // Walks parent links upward from `c` (exclusive): nearest first.
    std::vector<const Comment*> chain_above(const Comment& c) const;

    friend bool operator==(const ThreadIndex&, const ThreadIndex&) = default;

private:
    std::vector<Comment> comments_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::optional<std::size_t>> parent_;
    std::vector<bool> orphan_;
    std::map<std::string, std::vector<std::size_t>> threads_;
};

struct HistoryEntry {
    CommentContext context;
    std::optional<ScoreLevel> support;

    friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct UserHistory {
    std::string user;
    std::string subreddit;
    std::vector<HistoryEntry> entries; // by (message.created_utc, message.id)
};

// One entry per comment by `user` in `subreddit` whose parent resolves.
// Ancestors are the nearest `max_ancestors` comments above the parent,
// listed oldest-first.
UserHistory extract_parent_contexts(const std::string& user, const std::string& subreddit,
                                    const ThreadIndex& index,
                                    int max_ancestors = kDefaultMaxAncestors);

struct ExitRecord {
    std::string user;
    std::string subreddit;
    std::int64_t last_active_utc = 0;
    double actual_rank = 0.0;
    std::optional<double> predicted_rank;
};

// Earliest-inactive user gets rank 1; exact ties share the average rank.
// Records are returned sorted by (actual_rank, user).
std::vector<ExitRecord> compute_actual_exit_order(std::span<const Comment> comments,
                                                  const std::string& subreddit);

} // namespace gravwell
