#pragma once

// genhull command line: subcommands fetch / profile / hull / run / meta / synth.
// Every subcommand is machine-first (JSON / CSV out); an INI config file with
// one section per subcommand mirrors the flags.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "genhull/genhull.hpp"
#include "genhull/openml.hpp"

namespace genhull::cli {

namespace detail {

inline std::ostream& open_or_stdout(std::ofstream& file, const std::string& path) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot open output file '" + path + "'");
    return file;
}

struct SourceSpec {
    std::vector<std::string> paths;
    std::vector<long> openml_ids;
    std::string target;     // empty: ARFF default target / last column
    std::string format = "auto";
    std::string cache_dir;
    std::string base_url = "https://www.openml.org";
};

inline TableFormat pick_format(const std::string& requested, const std::string& path) {
    if (requested == "csv") return TableFormat::csv;
    if (requested == "arff") return TableFormat::arff;
    return guess_format(path);
}

inline Dataset load_source_file(const std::string& path, const SourceSpec& spec, const std::string& id,
                                const std::string& fallback_target = "") {
    const TableFormat format = pick_format(spec.format, path);
    std::string target = !spec.target.empty() ? spec.target : fallback_target;
    if (target.empty()) {
        const auto cols = peek_columns(path, format);
        target = cols.back();
    }
    return validate(load_table(path, format, target, id));
}

/// Materialize every source as a validated dataset, fetching OpenML ids
/// through the cache first.
inline std::vector<Dataset> load_sources(const SourceSpec& spec) {
    std::vector<Dataset> out;
    for (const auto& path : spec.paths) out.push_back(load_source_file(path, spec, path));
    for (long id : spec.openml_ids) {
        OpenMLConfig cfg;
        cfg.base_url = spec.base_url;
        cfg.cache_dir = spec.cache_dir;
        const FetchResult fetched = fetch_openml(id, cfg);
        SourceSpec arff_spec = spec;
        arff_spec.format = "arff";
        out.push_back(load_source_file(fetched.data_path, arff_spec, "openml:" + std::to_string(id),
                                       fetched.default_target));
    }
    return out;
}

inline void add_source_options(CLI::App* sub, SourceSpec& spec) {
    sub->add_option("--data", spec.paths, "dataset file (CSV or ARFF), repeatable")->check(CLI::ExistingFile);
    sub->add_option("--openml", spec.openml_ids, "OpenML dataset id, repeatable");
    sub->add_option("--target", spec.target, "target column name (default: repository default or last column)");
    sub->add_option("--format", spec.format, "csv, arff or auto")->check(CLI::IsMember({"csv", "arff", "auto"}));
    sub->add_option("--cache", spec.cache_dir, "OpenML cache directory")->envname("GENHULL_CACHE");
    sub->add_option("--base-url", spec.base_url, "OpenML service root");
}

inline std::vector<ClassifierConfig> parse_classifiers(const std::vector<std::string>& names,
                                                       std::uint64_t seed, unsigned jobs) {
    std::vector<ClassifierConfig> out;
    for (const auto& raw : names) {
        std::stringstream ss(raw);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            if (item == "logreg") {
                out.push_back(ClassifierConfig::logistic());
            } else if (item == "forest") {
                ForestConfig fc;
                fc.seed = seed;
                fc.jobs = jobs;
                out.push_back(ClassifierConfig::random_forest(fc));
            } else {
                throw std::runtime_error("unknown classifier '" + item + "' (built-ins: logreg, forest)");
            }
        }
    }
    if (out.empty()) throw std::runtime_error("no classifiers selected");
    return out;
}

inline nlohmann::ordered_json hull_split_json(const HullSplit& split) {
    nlohmann::ordered_json j;
    j["inside_idx"] = split.inside_idx;
    j["outside_idx"] = split.outside_idx;
    j["T_in"] = split.t_in;
    j["T_out"] = split.t_out;
    return j;
}

inline nlohmann::ordered_json metric_vector_json(const std::string& id, const MetricVector& m) {
    nlohmann::ordered_json j;
    j["dataset_id"] = id;
    j["n"] = m.n;
    j["d"] = m.d;
    j["c"] = m.c;
    j["lambda"] = m.lambda;
    j["rho"] = m.rho;
    j["gamma"] = m.gamma;
    j["kappa"] = m.kappa;
    j["eta"] = m.eta;
    j["idim"] = m.idim;
    j["idim_ratio"] = m.idim_ratio;
    j["noise"] = m.noise;
    j["mean_dist"] = m.mean_dist;
    j["std_dist"] = m.std_dist;
    j["ci"] = m.ci;
    return j;
}

}  // namespace detail

/// Parse argv, route to a subcommand, run it. Returns the process exit code;
/// failures print one diagnostic line on stderr.
inline int dispatch(int argc, const char* const* argv) {
    CLI::App app{"convex-hull generalization profiling for classification datasets"};
    app.set_config("--config", "", "INI config file with one section per subcommand");
    app.require_subcommand(1);

    // --- synth --------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate equicorrelated Gaussian datasets as CSV");
    struct {
        std::string kind = "two-class";
        GaussianSpec spec;
        double delta = 1.0;
        std::string out;
    } synth_opt;
    synth->add_option("--kind", synth_opt.kind, "cloud or two-class")
        ->check(CLI::IsMember({"cloud", "two-class"}));
    synth->add_option("--n", synth_opt.spec.n, "sample count");
    synth->add_option("--d", synth_opt.spec.d, "feature count");
    synth->add_option("--rho", synth_opt.spec.rho, "pairwise correlation in [0,1]");
    synth->add_option("--mu", synth_opt.spec.mu, "mean");
    synth->add_option("--sigma", synth_opt.spec.sigma, "standard deviation");
    synth->add_option("--seed", synth_opt.spec.seed, "RNG seed");
    synth->add_option("--delta", synth_opt.delta, "class-mean separation (two-class)");
    synth->add_option("--out", synth_opt.out, "output CSV path (default stdout)");
    synth->callback([&] {
        std::ofstream file;
        auto& os = detail::open_or_stdout(file, synth_opt.out);
        if (synth_opt.kind == "cloud") {
            write_matrix_csv(os, gaussian_cloud(synth_opt.spec));
        } else {
            write_dataset_csv(os, two_class_gaussians(synth_opt.spec, synth_opt.delta));
        }
    });

    // --- fetch --------------------------------------------------------------
    auto* fetch = app.add_subcommand("fetch", "download OpenML datasets into the local cache");
    struct {
        std::vector<long> ids;
        std::string cache;
        std::string base_url = "https://www.openml.org";
    } fetch_opt;
    fetch->add_option("--id", fetch_opt.ids, "OpenML dataset id, repeatable")->required();
    fetch->add_option("--cache", fetch_opt.cache, "cache directory")->envname("GENHULL_CACHE");
    fetch->add_option("--base-url", fetch_opt.base_url, "OpenML service root");
    fetch->callback([&] {
        for (long id : fetch_opt.ids) {
            OpenMLConfig cfg;
            cfg.cache_dir = fetch_opt.cache;
            cfg.base_url = fetch_opt.base_url;
            const FetchResult r = fetch_openml(id, cfg);
            std::cout << r.data_path << '\n';
        }
    });

    // --- profile ------------------------------------------------------------
    auto* profile_cmd = app.add_subcommand("profile", "compute the meta-feature vector per dataset");
    struct {
        detail::SourceSpec sources;
        std::uint64_t seed = 0;
        bool as_csv = false;
        std::string out;
    } profile_opt;
    detail::add_source_options(profile_cmd, profile_opt.sources);
    profile_cmd->add_option("--seed", profile_opt.seed, "RNG seed for subsampled computations");
    profile_cmd->add_flag("--csv", profile_opt.as_csv, "emit CSV rows instead of JSON objects");
    profile_cmd->add_option("--out", profile_opt.out, "output path (default stdout)");
    profile_cmd->callback([&] {
        const auto datasets = detail::load_sources(profile_opt.sources);
        if (datasets.empty()) throw std::runtime_error("profile: no input datasets (use --data / --openml)");
        std::ofstream file;
        auto& os = detail::open_or_stdout(file, profile_opt.out);
        if (profile_opt.as_csv) os << profile_csv_header() << '\n';
        for (const auto& ds : datasets) {
            std::vector<std::string> warnings;
            const MetricVector m = profile(ds, profile_opt.seed, &warnings);
            for (const auto& w : warnings) std::cerr << "warning: " << ds.id << ": " << w << '\n';
            if (profile_opt.as_csv) {
                os << profile_csv_row(ds.id, m) << '\n';
            } else {
                os << detail::metric_vector_json(ds.id, m).dump() << '\n';
            }
        }
    });

    // --- hull ---------------------------------------------------------------
    auto* hull_cmd = app.add_subcommand("hull", "split test points by train-hull membership");
    struct {
        std::string train;
        std::string test;
        double tol = 1e-7;
        unsigned jobs = 1;
        std::string out;
    } hull_opt;
    hull_cmd->add_option("--train", hull_opt.train, "training points CSV (numeric, headered)")
        ->required()
        ->check(CLI::ExistingFile);
    hull_cmd->add_option("--test", hull_opt.test, "test points CSV")->required()->check(CLI::ExistingFile);
    hull_cmd->add_option("--tol", hull_opt.tol, "Phase-I feasibility tolerance");
    hull_cmd->add_option("--jobs", hull_opt.jobs, "worker threads");
    hull_cmd->add_option("--out", hull_opt.out, "output path (default stdout)");
    hull_cmd->callback([&] {
        if (!(hull_opt.tol > 0.0)) throw std::runtime_error("hull: tolerance must be positive");
        const Matrix train = read_matrix_csv(hull_opt.train);
        const Matrix test = read_matrix_csv(hull_opt.test);
        const HullSplit split = split_by_hull(train, test, hull_opt.tol, hull_opt.jobs);
        std::ofstream file;
        detail::open_or_stdout(file, hull_opt.out) << detail::hull_split_json(split).dump(2) << '\n';
    });

    // --- run ----------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "cross-validation generalization experiments");
    struct {
        detail::SourceSpec sources;
        std::size_t k = 10;
        std::uint64_t seed = 0;
        std::vector<std::string> classifiers{"logreg,forest"};
        double tol = 1e-7;
        unsigned jobs = 1;
        std::string out = "results.jsonl";
        std::string summary;
        std::string profiles;
        bool overwrite = false;
    } run_opt;
    detail::add_source_options(run_cmd, run_opt.sources);
    run_cmd->add_option("--k", run_opt.k, "folds");
    run_cmd->add_option("--seed", run_opt.seed, "global seed");
    run_cmd->add_option("--classifiers", run_opt.classifiers, "comma list: logreg,forest");
    run_cmd->add_option("--tol", run_opt.tol, "hull feasibility tolerance");
    run_cmd->add_option("--jobs", run_opt.jobs, "worker threads");
    run_cmd->add_option("--out", run_opt.out, "JSONL output (appended; runs resume by dataset id)");
    run_cmd->add_option("--summary", run_opt.summary, "write the aggregate summary JSON here");
    run_cmd->add_option("--profiles", run_opt.profiles, "also write per-dataset profile CSV here");
    run_cmd->add_flag("--overwrite", run_opt.overwrite, "truncate --out instead of resuming");
    run_cmd->callback([&] {
        if (run_opt.k < 2) throw std::runtime_error("run: k must be >= 2");
        if (!(run_opt.tol > 0.0)) throw std::runtime_error("run: tolerance must be positive");
        const auto datasets = detail::load_sources(run_opt.sources);
        if (datasets.empty()) throw std::runtime_error("run: no input datasets (use --data / --openml)");
        const auto configs = detail::parse_classifiers(run_opt.classifiers, run_opt.seed, run_opt.jobs);

        std::vector<GeneralizationRecord> existing;
        if (run_opt.overwrite) {
            std::ofstream trunc(run_opt.out, std::ios::trunc);
        } else if (std::filesystem::exists(run_opt.out)) {
            existing = read_records_jsonl(run_opt.out);
        }
        std::set<std::string> done;
        for (const auto& r : existing) done.insert(r.dataset_id);

        std::vector<GeneralizationRecord> all = existing;
        for (const auto& ds : datasets) {
            if (done.count(ds.id)) {
                std::cerr << "resume: skipping " << ds.id << " (already in " << run_opt.out << ")\n";
                continue;
            }
            RunOptions opt;
            opt.k = run_opt.k;
            opt.seed = run_opt.seed;
            opt.hull_tol = run_opt.tol;
            opt.jobs = run_opt.jobs;
            const auto records = run_cv(ds, configs, opt);
            append_records_jsonl(run_opt.out, records);
            all.insert(all.end(), records.begin(), records.end());
        }

        if (!run_opt.profiles.empty()) {
            std::ofstream pf(run_opt.profiles);
            if (!pf) throw std::runtime_error("run: cannot open '" + run_opt.profiles + "'");
            pf << profile_csv_header() << '\n';
            for (const auto& ds : datasets) pf << profile_csv_row(ds.id, profile(ds, run_opt.seed)) << '\n';
        }

        const auto summary = summary_to_json(aggregate(all));
        if (run_opt.summary.empty()) {
            std::cout << summary.dump(2) << '\n';
        } else {
            std::ofstream sf(run_opt.summary);
            if (!sf) throw std::runtime_error("run: cannot open '" + run_opt.summary + "'");
            sf << summary.dump(2) << '\n';
        }
    });

    // --- meta ---------------------------------------------------------------
    auto* meta_cmd = app.add_subcommand("meta", "cross-dataset meta-analysis over harness output");
    struct {
        std::string records;
        std::string profiles;
        std::string out_dir = ".";
        std::vector<std::string> columns;
        std::vector<std::string> sr_targets;
        std::vector<std::string> sr_features;
        std::size_t sr_pop = 400;
        std::size_t sr_gens = 200;
        std::uint64_t seed = 0;
    } meta_opt;
    meta_cmd->add_option("--records", meta_opt.records, "harness JSONL")->required()->check(CLI::ExistingFile);
    meta_cmd->add_option("--profiles", meta_opt.profiles, "profile CSV")->required()->check(CLI::ExistingFile);
    meta_cmd->add_option("--out-dir", meta_opt.out_dir, "output directory");
    meta_cmd->add_option("--columns", meta_opt.columns, "columns for the correlation matrix (comma list)");
    meta_cmd->add_option("--sr-target", meta_opt.sr_targets, "symbolic-regression target column, repeatable");
    meta_cmd->add_option("--sr-features", meta_opt.sr_features,
                         "columns SR may use (comma list, default: all except the target)");
    meta_cmd->add_option("--sr-pop", meta_opt.sr_pop, "SR population size");
    meta_cmd->add_option("--sr-gens", meta_opt.sr_gens, "SR generations");
    meta_cmd->add_option("--seed", meta_opt.seed, "SR seed");
    meta_cmd->callback([&] {
        std::ifstream pf(meta_opt.profiles);
        if (!pf) throw std::runtime_error("meta: cannot open '" + meta_opt.profiles + "'");
        const auto profiles = read_profiles_csv(pf);
        const auto records = read_records_jsonl(meta_opt.records);
        const MetaTable table = build_meta_table(profiles, records);

        std::filesystem::create_directories(meta_opt.out_dir);
        const std::filesystem::path dir = meta_opt.out_dir;

        std::vector<std::string> cols;
        for (const auto& raw : meta_opt.columns) {
            std::stringstream ss(raw);
            std::string item;
            while (std::getline(ss, item, ','))
                if (!item.empty()) cols.push_back(item);
        }
        if (cols.empty()) cols = meta_table_columns();

        const Matrix corr = correlation_matrix(table, cols);
        {
            std::ofstream cf(dir / "correlation_matrix.csv");
            cf << "";
            for (const auto& c : cols) cf << ',' << c;
            cf << '\n';
            cf.precision(17);
            for (std::size_t i = 0; i < corr.rows(); ++i) {
                cf << cols[i];
                for (std::size_t j = 0; j < corr.cols(); ++j) {
                    cf << ',';
                    if (!std::isnan(corr(i, j))) cf << corr(i, j);
                }
                cf << '\n';
            }
        }
        {
            std::ofstream sf(dir / "correlation_matrix.svg");
            sf << correlation_svg(corr, cols);
        }
        {
            nlohmann::ordered_json out = nlohmann::ordered_json::array();
            for (const auto& rep : eval_fixed_equations(table)) {
                nlohmann::ordered_json j;
                j["name"] = rep.name;
                j["target"] = rep.target_column;
                j["classifier"] = rep.classifier.empty() ? "any" : rep.classifier;
                j["rows"] = rep.n_rows;
                if (rep.r2) j["r2"] = *rep.r2;
                if (!rep.note.empty()) j["note"] = rep.note;
                out.push_back(std::move(j));
            }
            std::ofstream ef(dir / "fixed_equations.json");
            ef << out.dump(2) << '\n';
        }
        for (const auto& target : meta_opt.sr_targets) {
            SrConfig cfg;
            cfg.population = meta_opt.sr_pop;
            cfg.generations = meta_opt.sr_gens;
            cfg.seed = meta_opt.seed;
            for (const auto& raw : meta_opt.sr_features) {
                std::stringstream ss(raw);
                std::string item;
                while (std::getline(ss, item, ','))
                    if (!item.empty()) cfg.feature_columns.push_back(item);
            }
            const ParetoFront front = sr_search(table, target, cfg);
            nlohmann::ordered_json out = nlohmann::ordered_json::array();
            for (const auto& s : front) {
                nlohmann::ordered_json j;
                j["complexity"] = s.complexity;
                j["r2"] = s.r2;
                j["formula"] = s.formula.to_string(table.columns);
                out.push_back(std::move(j));
            }
            std::ofstream ff(dir / ("pareto_" + target + ".json"));
            ff << out.dump(2) << '\n';
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "genhull: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

inline int dispatch(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("genhull");
    for (const auto& a : args) argv.push_back(a.c_str());
    return dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace genhull::cli
