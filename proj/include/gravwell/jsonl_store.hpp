#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace gravwell {

// Append-only JSON Lines key/value store. Each line is an object with a
// string "key"; on load the last line for a key wins and unparseable lines
// are skipped. Reads are concurrent; writes are serialized and flushed.
class JsonlStore {
public:
    JsonlStore() = default;
    explicit JsonlStore(std::filesystem::path path);

    JsonlStore(const JsonlStore&) = delete;
    JsonlStore& operator=(const JsonlStore&) = delete;

    std::optional<nlohmann::json> get(const std::string& key) const;
    void put(const nlohmann::json& record); // record["key"] must be a string
    std::size_t size() const;
    std::size_t skipped_lines() const noexcept { return skipped_; }
    const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

private:
    std::optional<std::filesystem::path> path_;
    std::unordered_map<std::string, nlohmann::json> records_;
    std::ofstream out_;
    std::size_t skipped_ = 0;
    mutable std::shared_mutex mu_;
};

} // namespace gravwell
