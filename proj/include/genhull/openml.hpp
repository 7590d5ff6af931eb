#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "genhull/core.hpp"

namespace genhull {

struct OpenMLConfig {
    std::string base_url = "https://www.openml.org";
    std::string cache_dir;          // empty: GENHULL_CACHE env, then ~/.cache/genhull
    int timeout_seconds = 60;
};

struct FetchResult {
    std::string data_path;          // local ARFF file
    std::string description_path;   // raw repository description JSON
    std::string name;
    std::string default_target;     // repository's default_target_attribute, may be empty
    bool from_cache = false;
};

inline std::string default_cache_dir() {
    if (const char* env = std::getenv("GENHULL_CACHE"); env && *env) return env;
    if (const char* home = std::getenv("HOME"); home && *home)
        return std::string(home) + "/.cache/genhull";
    return ".genhull_cache";
}

namespace detail {

struct UrlParts {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

inline UrlParts split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("split_url: no scheme in '" + url + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::string http_get(const std::string& url, int timeout_seconds) {
    const UrlParts parts = split_url(url);
    httplib::Client cli(parts.origin);
    cli.set_connection_timeout(timeout_seconds);
    cli.set_read_timeout(timeout_seconds);
    cli.set_follow_location(true);
    auto res = cli.Get(parts.path);
    if (!res) throw HttpError("fetch_openml: request to " + url + " failed (" + httplib::to_string(res.error()) + ")", 0);
    if (res->status != 200) throw HttpError("fetch_openml: request to " + url + " failed", res->status);
    return res->body;
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("fetch_openml: cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

/// Single-writer lockfile per dataset id; stale locks (10 min) are stolen.
class CacheLock {
public:
    explicit CacheLock(std::filesystem::path path) : path_(std::move(path)) {
        using namespace std::chrono;
        const auto deadline = steady_clock::now() + seconds(120);
        while (true) {
            const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
            if (fd >= 0) {
                ::close(fd);
                held_ = true;
                return;
            }
            std::error_code ec;
            const auto mtime = std::filesystem::last_write_time(path_, ec);
            if (!ec && std::filesystem::file_time_type::clock::now() - mtime > minutes(10)) {
                std::filesystem::remove(path_, ec);  // stale
                continue;
            }
            if (steady_clock::now() > deadline)
                throw std::runtime_error("fetch_openml: timed out waiting for lock " + path_.string());
            std::this_thread::sleep_for(milliseconds(100));
        }
    }
    ~CacheLock() {
        if (held_) {
            std::error_code ec;
            std::filesystem::remove(path_, ec);
        }
    }
    CacheLock(const CacheLock&) = delete;
    CacheLock& operator=(const CacheLock&) = delete;

private:
    std::filesystem::path path_;
    bool held_ = false;
};

inline std::optional<FetchResult> cache_lookup(const std::filesystem::path& dir) {
    const auto meta_path = dir / "meta.json";
    const auto data_path = dir / "dataset.arff";
    const auto desc_path = dir / "description.json";
    if (!std::filesystem::exists(meta_path) || !std::filesystem::exists(data_path)) return std::nullopt;

    std::ifstream meta_in(meta_path);
    nlohmann::json meta;
    meta_in >> meta;
    const auto expected = meta.at("size").get<std::uintmax_t>();
    const auto actual = std::filesystem::file_size(data_path);
    if (actual != expected)
        throw std::runtime_error("fetch_openml: cached file size mismatch for " + data_path.string() + " (" +
                                 std::to_string(actual) + " != " + std::to_string(expected) +
                                 "); remove the cache entry to refetch");
    FetchResult r;
    r.data_path = data_path.string();
    r.description_path = desc_path.string();
    r.name = meta.value("name", "");
    r.default_target = meta.value("default_target", "");
    r.from_cache = true;
    return r;
}

}  // namespace detail

/// Download an OpenML dataset description and its ARFF payload, caching both
/// under cache_dir/<id>/. Warm-cache calls never touch the network.
inline FetchResult fetch_openml(long dataset_id, const OpenMLConfig& cfg = {}) {
    const std::filesystem::path root = cfg.cache_dir.empty() ? default_cache_dir() : cfg.cache_dir;
    const std::filesystem::path dir = root / std::to_string(dataset_id);
    std::filesystem::create_directories(dir);

    if (auto hit = detail::cache_lookup(dir)) return *hit;

    detail::CacheLock lock(dir / ".lock");
    if (auto hit = detail::cache_lookup(dir)) return *hit;  // filled while we waited

    const std::string desc_url = cfg.base_url + "/api/v1/json/data/" + std::to_string(dataset_id);
    const std::string desc_body = detail::http_get(desc_url, cfg.timeout_seconds);

    nlohmann::json desc;
    try {
        desc = nlohmann::json::parse(desc_body);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("fetch_openml: malformed description for id " +
                                 std::to_string(dataset_id) + ": " + e.what());
    }
    if (!desc.contains("data_set_description"))
        throw std::runtime_error("fetch_openml: description for id " + std::to_string(dataset_id) +
                                 " lacks data_set_description");
    const auto& d = desc.at("data_set_description");
    const std::string data_url = d.at("url").get<std::string>();
    const std::string name = d.value("name", "");
    const std::string target = d.value("default_target_attribute", "");

    const std::string payload = detail::http_get(data_url, cfg.timeout_seconds);

    detail::write_file_atomic(dir / "dataset.arff", payload);
    detail::write_file_atomic(dir / "description.json", desc_body);
    nlohmann::ordered_json meta;
    meta["id"] = dataset_id;
    meta["name"] = name;
    meta["default_target"] = target;
    meta["size"] = payload.size();
    if (d.contains("md5_checksum")) meta["md5_checksum"] = d.at("md5_checksum");
    detail::write_file_atomic(dir / "meta.json", meta.dump(2));

    FetchResult r;
    r.data_path = (dir / "dataset.arff").string();
    r.description_path = (dir / "description.json").string();
    r.name = name;
    r.default_target = target;
    r.from_cache = false;
    return r;
}

}  // namespace genhull
