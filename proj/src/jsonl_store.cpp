#include "gravwell/jsonl_store.hpp"

#include "gravwell/error.hpp"

namespace gravwell {

JsonlStore::JsonlStore(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(*path_)) {
        std::ifstream in(*path_, std::ios::binary);
        if (!in) throw IoError("cannot read cache file: " + path_->string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto j = nlohmann::json::parse(line, nullptr, false);
            if (!j.is_object() || !j.contains("key") || !j["key"].is_string()) {
                ++skipped_;
                continue;
            }
            std::string key = j["key"].get<std::string>();
            records_[std::move(key)] = std::move(j);
        }
    } else if (path_->has_parent_path()) {
        std::filesystem::create_directories(path_->parent_path());
    }
    out_.open(*path_, std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot open cache file for append: " + path_->string());
}

std::optional<nlohmann::json> JsonlStore::get(const std::string& key) const {
    std::shared_lock lock(mu_);
    auto it = records_.find(key);
    if (it == records_.end()) return std::nullopt;
    return std::optional<nlohmann::json>(std::in_place, it->second);
}

void JsonlStore::put(const nlohmann::json& record) {
    std::string key = record.at("key").get<std::string>();
    std::unique_lock lock(mu_);
    if (out_.is_open()) {
        out_ << record.dump() << '\n';
        out_.flush();
        if (!out_) throw IoError("cache append failed: " + path_->string());
    }
    records_[std::move(key)] = record;
}

std::size_t JsonlStore::size() const {
    std::shared_lock lock(mu_);
    return records_.size();
}

} // namespace gravwell
