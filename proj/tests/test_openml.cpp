#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "cli_app.hpp"
#include "genhull/io.hpp"
#include "genhull/openml.hpp"

using namespace genhull;

namespace {

const char* kArffBody =
    "@relation served\n"
    "@attribute f0 numeric\n"
    "@attribute f1 numeric\n"
    "@attribute f2 numeric\n"
    "@attribute class {a,b}\n"
    "@data\n"
    "0.10,3.2,-0.4,a\n"
    "1.14,2.2,0.31,b\n"
    "2.13,5.2,-1.3,a\n"
    "3.12,4.9,2.35,b\n"
    "4.17,1.2,0.39,a\n"
    "0.65,2.7,1.11,b\n"
    "1.41,3.9,-0.28,a\n"
    "2.76,0.8,0.93,b\n"
    "3.57,2.1,-2.07,a\n"
    "4.49,3.3,1.62,b\n"
    "0.98,1.7,-0.55,a\n"
    "1.87,4.4,0.74,b\n";

/// Minimal OpenML-shaped server: a JSON description endpoint plus the data
/// file it points at.
class FixtureServer {
public:
    FixtureServer() {
        server_.Get(R"(/api/v1/json/data/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
            ++description_requests_;
            if (req.matches[1] != "61") {
                res.status = 404;
                res.set_content("{\"error\":\"unknown dataset\"}", "application/json");
                return;
            }
            const std::string body =
                std::string("{\"data_set_description\":{\"id\":\"61\",\"name\":\"served\","
                            "\"default_target_attribute\":\"class\",\"url\":\"") +
                base_url() + "/data/v1/download/61.arff\"}}";
            res.set_content(body, "application/json");
        });
        server_.Get("/data/v1/download/61.arff", [this](const httplib::Request&, httplib::Response& res) {
            ++data_requests_;
            res.set_content(kArffBody, "text/plain");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FixtureServer() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int description_requests() const { return description_requests_; }
    int data_requests() const { return data_requests_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> description_requests_{0};
    std::atomic<int> data_requests_{0};
};

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / ("genhull_test_" + tag + "_" +
                                                          std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("fetch_openml downloads, caches, then stays offline") {
    FixtureServer server;
    TempDir cache("fetch");
    OpenMLConfig cfg;
    cfg.base_url = server.base_url();
    cfg.cache_dir = cache.path.string();

    const FetchResult first = fetch_openml(61, cfg);
    CHECK(!first.from_cache);
    CHECK(first.name == "served");
    CHECK(first.default_target == "class");
    CHECK(std::filesystem::exists(first.data_path));
    CHECK(server.description_requests() == 1);
    CHECK(server.data_requests() == 1);

    const FetchResult second = fetch_openml(61, cfg);
    CHECK(second.from_cache);
    CHECK(second.data_path == first.data_path);
    CHECK(server.description_requests() == 1);  // zero network on a warm cache
    CHECK(server.data_requests() == 1);
}

TEST_CASE("fetched file parses into the shape the fixture advertises") {
    FixtureServer server;
    TempDir cache("parse");
    OpenMLConfig cfg;
    cfg.base_url = server.base_url();
    cfg.cache_dir = cache.path.string();

    const FetchResult r = fetch_openml(61, cfg);
    const Dataset ds = validate(load_table(r.data_path, TableFormat::arff, r.default_target, "openml:61"));
    CHECK(ds.n_samples() == 12);
    CHECK(ds.n_features() == 3);
    CHECK(ds.n_classes() == 2);
}

TEST_CASE("unknown id carries the HTTP status") {
    FixtureServer server;
    TempDir cache("missing");
    OpenMLConfig cfg;
    cfg.base_url = server.base_url();
    cfg.cache_dir = cache.path.string();

    try {
        fetch_openml(9999, cfg);
        FAIL("expected HttpError");
    } catch (const HttpError& e) {
        CHECK(e.status == 404);
    }
}

TEST_CASE("cache size mismatch is reported, not silently served") {
    FixtureServer server;
    TempDir cache("corrupt");
    OpenMLConfig cfg;
    cfg.base_url = server.base_url();
    cfg.cache_dir = cache.path.string();

    const FetchResult r = fetch_openml(61, cfg);
    {
        std::ofstream truncate(r.data_path, std::ios::trunc);
        truncate << "oops";
    }
    CHECK_THROWS_WITH_AS(fetch_openml(61, cfg), doctest::Contains("size mismatch"), std::runtime_error);
}

TEST_CASE("concurrent fetches download the payload once") {
    FixtureServer server;
    TempDir cache("race");
    OpenMLConfig cfg;
    cfg.base_url = server.base_url();
    cfg.cache_dir = cache.path.string();

    std::vector<std::thread> threads;
    std::atomic<int> failures{0};
    for (int t = 0; t < 4; ++t)
        threads.emplace_back([&] {
            try {
                fetch_openml(61, cfg);
            } catch (...) {
                ++failures;
            }
        });
    for (auto& th : threads) th.join();
    CHECK(failures == 0);
    CHECK(server.data_requests() == 1);  // single writer held the lock
}

TEST_CASE("default cache honors GENHULL_CACHE") {
    ::setenv("GENHULL_CACHE", "/tmp/genhull_env_cache_test", 1);
    CHECK(default_cache_dir() == "/tmp/genhull_env_cache_test");
    ::unsetenv("GENHULL_CACHE");
}

TEST_CASE("CLI fetch and --openml sources go through the same cache") {
    FixtureServer server;
    TempDir cache("cli");
    const std::string out = (cache.path / "profiles.csv").string();

    CHECK(genhull::cli::dispatch({"fetch", "--id", "61", "--cache", cache.path.string(), "--base-url",
                                  server.base_url()}) == 0);
    CHECK(server.data_requests() == 1);

    CHECK(genhull::cli::dispatch({"profile", "--openml", "61", "--cache", cache.path.string(),
                                  "--base-url", server.base_url(), "--csv", "--out", out}) == 0);
    CHECK(server.data_requests() == 1);  // cache hit, no second download

    std::ifstream in(out);
    const auto profiles = read_profiles_csv(in);
    REQUIRE(profiles.count("openml:61") == 1);
    CHECK(profiles.at("openml:61").n == 12);
    CHECK(profiles.at("openml:61").d == 3);
}
