#include "gravwell/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

#include "gravwell/ranking.hpp"

namespace gravwell {

namespace {

using nlohmann::json;

std::optional<std::string> string_field(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
    return std::nullopt;
}

// Dumps store created_utc either as a number or as a quoted number.
std::optional<std::int64_t> integer_field(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (it->is_number_integer()) return it->get<std::int64_t>();
    if (it->is_number_float()) return static_cast<std::int64_t>(it->get<double>());
    if (it->is_string()) {
        const auto& s = it->get_ref<const std::string&>();
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) return std::nullopt;
            return static_cast<std::int64_t>(v);
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }
    return std::nullopt;
}

enum class LineOutcome { Ok, Malformed, Dropped };

LineOutcome parse_line(const std::string& line, Comment& out) {
    json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (!obj.is_object()) return LineOutcome::Malformed;

    auto id = string_field(obj, "id");
    auto author = string_field(obj, "author");
    auto subreddit = string_field(obj, "subreddit");
    auto created = integer_field(obj, "created_utc");
    auto body_it = obj.find("body");
    if (!id || !author || !subreddit || !created || body_it == obj.end() || !body_it->is_string()) {
        return LineOutcome::Malformed;
    }

    out = Comment{};
    out.id = strip_type_prefix(*id);
    out.author = std::move(*author);
    out.subreddit = std::move(*subreddit);
    out.created_utc = *created;
    out.body = body_it->get<std::string>();
    if (out.id.empty() || out.created_utc <= 0) return LineOutcome::Malformed;

    if (auto parent = string_field(obj, "parent_id"); parent && !parent->empty()) {
        out.parent_id = strip_type_prefix(*parent);
    }
    if (auto thread = string_field(obj, "link_id")) {
        out.thread_id = strip_type_prefix(*thread);
    } else if (auto t = string_field(obj, "thread_id")) {
        out.thread_id = strip_type_prefix(*t);
    }
    if (out.parent_id && *out.parent_id == out.id) return LineOutcome::Malformed;
    if (!out.parent_id && out.thread_id.empty()) out.thread_id = out.id;
    if (auto score = integer_field(obj, "score")) out.engagement = *score;

    if (out.author == "[deleted]" || out.body.empty() || out.body == "[removed]" ||
        out.body == "[deleted]") {
        return LineOutcome::Dropped;
    }
    return LineOutcome::Ok;
}

bool chrono_less(const Comment& a, const Comment& b) {
    if (a.created_utc != b.created_utc) return a.created_utc < b.created_utc;
    return a.id < b.id;
}

} // namespace

std::string strip_type_prefix(std::string_view id) {
    if (id.size() > 3 && id[0] == 't' && id[1] >= '1' && id[1] <= '9' && id[2] == '_') {
        id.remove_prefix(3);
    }
    return std::string(id);
}

ParseResult parse_comments(std::istream& in) {
    ParseResult result;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    std::size_t last_ok = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        Comment c;
        switch (parse_line(line, c)) {
        case LineOutcome::Malformed:
            ++result.malformed;
            break;
        case LineOutcome::Dropped:
            ++result.dropped;
            last_ok = line_no;
            break;
        case LineOutcome::Ok:
            if (!seen.insert(c.id).second) {
                ++result.duplicates;
            } else {
                result.comments.push_back(std::move(c));
            }
            last_ok = line_no;
            break;
        }
    }
    if (in.bad()) {
        throw IoError(fmt::format("read failure after line {} (last successfully parsed line {})",
                                  line_no, last_ok));
    }
    return result;
}

ParseResult parse_comments_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open input file: " + path);
    return parse_comments(in);
}

std::string serialize_comment(const Comment& c) {
    nlohmann::ordered_json j;
    j["id"] = c.id;
    if (c.parent_id) j["parent_id"] = *c.parent_id;
    j["thread_id"] = c.thread_id;
    j["author"] = c.author;
    j["subreddit"] = c.subreddit;
    j["created_utc"] = c.created_utc;
    j["body"] = c.body;
    j["score"] = c.engagement;
    return j.dump();
}

nlohmann::json to_json(const Comment& c) { return nlohmann::json::parse(serialize_comment(c)); }

ThreadIndex ThreadIndex::build(std::vector<Comment> comments) {
    ThreadIndex ix;
    std::sort(comments.begin(), comments.end(), chrono_less);
    ix.comments_ = std::move(comments);
    const std::size_t n = ix.comments_.size();

    ix.by_id_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!ix.by_id_.emplace(ix.comments_[i].id, i).second) {
            throw CorpusError("duplicate comment id: " + ix.comments_[i].id);
        }
    }

    ix.children_.assign(n, {});
    ix.parent_.assign(n, std::nullopt);
    ix.orphan_.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& pid = ix.comments_[i].parent_id;
        if (!pid) continue;
        if (auto it = ix.by_id_.find(*pid); it != ix.by_id_.end()) {
            ix.parent_[i] = it->second;
            ix.children_[it->second].push_back(i); // i ascending => chronological
        } else {
            ix.orphan_[i] = true;
        }
    }

    // Cycle detection: 0 = unvisited, 1 = on current path, 2 = done.
    std::vector<std::uint8_t> state(n, 0);
    for (std::size_t start = 0; start < n; ++start) {
        if (state[start] != 0) continue;
        std::vector<std::size_t> path;
        std::optional<std::size_t> cur = start;
        while (cur && state[*cur] == 0) {
            state[*cur] = 1;
            path.push_back(*cur);
            cur = ix.parent_[*cur];
        }
        if (cur && state[*cur] == 1) {
            auto it = std::find(path.begin(), path.end(), *cur);
            std::vector<std::string> members;
            for (; it != path.end(); ++it) members.push_back(ix.comments_[*it].id);
            std::sort(members.begin(), members.end());
            throw CorpusError(fmt::format("parent cycle among comments: {}", fmt::join(members, ", ")));
        }
        for (auto p : path) state[p] = 2;
    }

    // Resolve missing thread ids from the top of each chain.
    for (std::size_t i = 0; i < n; ++i) {
        if (!ix.comments_[i].thread_id.empty()) continue;
        std::size_t top = i;
        while (ix.parent_[top]) top = *ix.parent_[top];
        const Comment& t = ix.comments_[top];
        if (!t.thread_id.empty()) {
            ix.comments_[i].thread_id = t.thread_id;
        } else if (t.parent_id) {
            ix.comments_[i].thread_id = *t.parent_id;
        } else {
            ix.comments_[i].thread_id = t.id;
        }
    }
    for (std::size_t i = 0; i < n; ++i) ix.threads_[ix.comments_[i].thread_id].push_back(i);
    return ix;
}

const Comment* ThreadIndex::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &comments_[it->second];
}

const Comment* ThreadIndex::parent_of(const Comment& c) const {
    return c.parent_id ? find(*c.parent_id) : nullptr;
}

std::vector<const Comment*> ThreadIndex::children(std::string_view id) const {
    std::vector<const Comment*> out;
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) return out;
    for (auto k : children_[it->second]) out.push_back(&comments_[k]);
    return out;
}

bool ThreadIndex::is_orphan(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it != by_id_.end() && orphan_[it->second];
}

std::size_t ThreadIndex::orphan_count() const noexcept {
    return static_cast<std::size_t>(std::count(orphan_.begin(), orphan_.end(), true));
}

std::vector<const Comment*> ThreadIndex::chain_above(const Comment& c) const {
    std::vector<const Comment*> out;
    const Comment* cur = parent_of(c);
    while (cur) {
        out.push_back(cur);
        cur = parent_of(*cur);
    }
    return out;
}

UserHistory extract_parent_contexts(const std::string& user, const std::string& subreddit,
                                    const ThreadIndex& index, int max_ancestors) {
    if (max_ancestors < 0) throw DomainError("max_ancestors must be >= 0");
    UserHistory h{user, subreddit, {}};
    for (const Comment& c : index.comments()) {
        if (c.author != user || c.subreddit != subreddit) continue;
        const Comment* parent = index.parent_of(c);
        if (!parent) continue;

        HistoryEntry e;
        e.context.message = c;
        e.context.parent = *parent;
        auto above = index.chain_above(*parent);
        if (above.size() > static_cast<std::size_t>(max_ancestors)) {
            above.resize(static_cast<std::size_t>(max_ancestors));
        }
        for (auto it = above.rbegin(); it != above.rend(); ++it) e.context.ancestors.push_back(**it);
        h.entries.push_back(std::move(e));
    }
    // index.comments() is already (created_utc, id) ordered
    return h;
}

std::vector<ExitRecord> compute_actual_exit_order(std::span<const Comment> comments,
                                                  const std::string& subreddit) {
    std::map<std::string, std::int64_t> last;
    for (const Comment& c : comments) {
        if (c.subreddit != subreddit) continue;
        auto [it, fresh] = last.emplace(c.author, c.created_utc);
        if (!fresh) it->second = std::max(it->second, c.created_utc);
    }
    std::vector<ExitRecord> out;
    std::vector<double> keys;
    for (const auto& [user, t] : last) {
        out.push_back(ExitRecord{user, subreddit, t, 0.0, std::nullopt});
        keys.push_back(static_cast<double>(t));
    }
    const auto ranks = average_ranks(keys);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].actual_rank = ranks[i];
    std::sort(out.begin(), out.end(), [](const ExitRecord& a, const ExitRecord& b) {
        if (a.actual_rank != b.actual_rank) return a.actual_rank < b.actual_rank;
        return a.user < b.user;
    });
    return out;
}

} // namespace gravwell
