#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli_app.hpp"

using genhull::cli::dispatch;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("genhull_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("synth emits a loadable two-class CSV") {
    TempDir dir("synth");
    const std::string out = dir.file("toy.csv");
    CHECK(dispatch({"synth", "--n", "60", "--d", "3", "--rho", "0.4", "--delta", "1.5", "--seed", "9",
                    "--out", out}) == 0);
    const auto ds = genhull::load_table(out, genhull::TableFormat::csv, std::string("target"));
    CHECK(ds.n_samples() == 60);
    CHECK(ds.n_features() == 3);
    CHECK(ds.n_classes() == 2);
}

TEST_CASE("synth cloud emits a plain numeric matrix") {
    TempDir dir("cloud");
    const std::string out = dir.file("cloud.csv");
    CHECK(dispatch({"synth", "--kind", "cloud", "--n", "25", "--d", "4", "--rho", "0.9", "--seed", "5",
                    "--out", out}) == 0);
    const auto m = genhull::read_matrix_csv(out);
    CHECK(m.rows() == 25);
    CHECK(m.cols() == 4);
}

TEST_CASE("hull subcommand writes a HullSplit JSON") {
    TempDir dir("hull");
    const std::string train = dir.file("train.csv");
    const std::string test = dir.file("test.csv");
    {
        std::ofstream t(train);
        t << "x,y\n0,0\n0,1\n1,0\n1,1\n";
        std::ofstream q(test);
        q << "x,y\n0.5,0.5\n2,2\n";
    }
    const std::string out = dir.file("split.json");
    CHECK(dispatch({"hull", "--train", train, "--test", test, "--out", out}) == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["T_in"] == 0.5);
    CHECK(j["T_out"] == 0.5);
    CHECK(j["inside_idx"].size() == 1);
    CHECK(j["outside_idx"].size() == 1);
}

TEST_CASE("run produces k * classifiers JSONL records and resumes by dataset id") {
    TempDir dir("run");
    const std::string data = dir.file("ds.csv");
    CHECK(dispatch({"synth", "--n", "80", "--d", "3", "--delta", "1.2", "--seed", "3", "--out", data}) == 0);

    const std::string out = dir.file("records.jsonl");
    const std::string summary = dir.file("summary.json");
    CHECK(dispatch({"run", "--data", data, "--k", "10", "--seed", "5", "--classifiers", "logreg,forest",
                    "--out", out, "--summary", summary}) == 0);
    const auto records = genhull::read_records_jsonl(out);
    CHECK(records.size() == 20);

    const auto j = nlohmann::json::parse(slurp(summary));
    CHECK(j.contains("logreg"));
    CHECK(j.contains("forest"));
    CHECK(j["logreg"].contains("F1_test"));

    // resuming skips the already-recorded dataset: file unchanged
    const std::string before = slurp(out);
    CHECK(dispatch({"run", "--data", data, "--k", "10", "--seed", "5", "--classifiers", "logreg,forest",
                    "--out", out, "--summary", summary}) == 0);
    CHECK(slurp(out) == before);
}

TEST_CASE("identical argv and seed give byte-identical outputs") {
    TempDir dir("determinism");
    const std::string data = dir.file("ds.csv");
    CHECK(dispatch({"synth", "--n", "50", "--d", "2", "--delta", "1.0", "--seed", "8", "--out", data}) == 0);

    const std::string out1 = dir.file("a.jsonl");
    const std::string out2 = dir.file("b.jsonl");
    for (const auto& out : {out1, out2})
        CHECK(dispatch({"run", "--data", data, "--k", "5", "--seed", "11", "--classifiers", "logreg,forest",
                        "--out", out, "--summary", dir.file("s.json")}) == 0);
    CHECK(slurp(out1) == slurp(out2));
}

TEST_CASE("profile --csv round-trips through the reader") {
    TempDir dir("profile");
    const std::string data = dir.file("ds.csv");
    CHECK(dispatch({"synth", "--n", "70", "--d", "4", "--delta", "0.8", "--seed", "2", "--out", data}) == 0);
    const std::string out = dir.file("profiles.csv");
    CHECK(dispatch({"profile", "--data", data, "--csv", "--out", out}) == 0);
    std::ifstream in(out);
    const auto profiles = genhull::read_profiles_csv(in);
    REQUIRE(profiles.size() == 1);
    CHECK(profiles.begin()->second.n == 70);
    CHECK(profiles.begin()->second.d == 4);
}

TEST_CASE("meta consumes run outputs and emits reports") {
    TempDir dir("meta");
    std::vector<std::string> run_args{"run", "--k",   "5",
                                      "--seed", "4",  "--classifiers", "logreg,forest"};
    for (int i = 0; i < 5; ++i) {
        const std::string data = dir.file("ds" + std::to_string(i) + ".csv");
        CHECK(dispatch({"synth", "--n", std::to_string(60 + 15 * i), "--d", std::to_string(2 + i % 3),
                        "--delta", std::to_string(0.6 + 0.3 * i), "--rho", std::to_string(0.15 * i),
                        "--seed", std::to_string(40 + i), "--out", data}) == 0);
        run_args.push_back("--data");
        run_args.push_back(data);
    }
    const std::string records = dir.file("records.jsonl");
    const std::string profiles = dir.file("profiles.csv");
    for (const auto& [flag, value] : {std::pair<std::string, std::string>{"--out", records},
                                      {"--summary", dir.file("s.json")},
                                      {"--profiles", profiles}}) {
        run_args.push_back(flag);
        run_args.push_back(value);
    }
    CHECK(dispatch(run_args) == 0);

    const std::string out_dir = dir.file("meta_out");
    CHECK(dispatch({"meta", "--records", records, "--profiles", profiles, "--out-dir", out_dir,
                    "--columns", "rho,idim_ratio,noise,F1_train,F1_test,T_in", "--sr-target", "F1_test",
                    "--sr-features", "rho,noise,F1_train", "--sr-pop", "60", "--sr-gens", "10", "--seed",
                    "3"}) == 0);
    CHECK(fs::exists(fs::path(out_dir) / "correlation_matrix.csv"));
    CHECK(fs::exists(fs::path(out_dir) / "correlation_matrix.svg"));
    const auto eq = nlohmann::json::parse(slurp((fs::path(out_dir) / "fixed_equations.json").string()));
    CHECK(eq.is_array());
    CHECK(eq.size() == 7);
    const auto front = nlohmann::json::parse(slurp((fs::path(out_dir) / "pareto_F1_test.json").string()));
    CHECK(front.is_array());
    CHECK(!front.empty());
    CHECK(front[0].contains("formula"));
}

TEST_CASE("config file sections mirror subcommand flags") {
    TempDir dir("config");
    const std::string data = dir.file("ds.csv");
    CHECK(dispatch({"synth", "--n", "40", "--d", "2", "--delta", "1.0", "--seed", "6", "--out", data}) == 0);

    const std::string cfg = dir.file("genhull.ini");
    const std::string out = dir.file("records.jsonl");
    {
        std::ofstream f(cfg);
        f << "[run]\n"
          << "data = " << data << "\n"
          << "k = 4\n"
          << "seed = 12\n"
          << "classifiers = logreg\n"
          << "out = " << out << "\n"
          << "summary = " << dir.file("summary.json") << "\n";
    }
    CHECK(dispatch({"--config", cfg, "run"}) == 0);
    CHECK(genhull::read_records_jsonl(out).size() == 4);

    // flags override file values
    const std::string out2 = dir.file("records2.jsonl");
    CHECK(dispatch({"--config", cfg, "run", "--out", out2, "--k", "3"}) == 0);
    CHECK(genhull::read_records_jsonl(out2).size() == 3);
}

TEST_CASE("bad invocations exit nonzero with diagnostics") {
    CHECK(dispatch({"frobnicate"}) != 0);               // unknown subcommand
    CHECK(dispatch({"hull", "--wat"}) != 0);            // unknown flag
    CHECK(dispatch({"hull"}) != 0);                     // missing required options
    CHECK(dispatch({"run", "--data", "/nonexistent/x.csv"}) != 0);
    CHECK(dispatch({}) != 0);                           // subcommand required
}
