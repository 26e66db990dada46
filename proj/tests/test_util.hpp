#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "gravwell/types.hpp"

namespace gravwell::testing {

inline std::filesystem::path data_dir() { return GRAVWELL_TEST_DATA; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "gw") {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                (tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

inline Comment comment(std::string id, std::optional<std::string> parent, std::string author,
                       std::int64_t t, std::string body = "text", std::string subreddit = "sub",
                       std::int64_t engagement = 0) {
    Comment c;
    c.id = std::move(id);
    c.parent_id = std::move(parent);
    c.author = std::move(author);
    c.subreddit = std::move(subreddit);
    c.created_utc = t;
    c.body = std::move(body);
    c.engagement = engagement;
    return c;
}

inline ScoreLevel lv(double v) { return ScoreLevel::from_value(v); }

} // namespace gravwell::testing
