#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "evoact/experiment.hpp"

namespace {

namespace fs = std::filesystem;
using namespace evoact;

int resolve_workers(std::optional<int> flag)
{
    if (flag) return std::max(1, *flag);
    if (const char* env = std::getenv("EVOACT_WORKERS")) {
        try {
            return std::max(1, std::stoi(env));
        } catch (const std::exception&) {
            throw ConfigError("EVOACT_WORKERS", "must be an integer");
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

fs::path run_directory(const fs::path& out, std::uint64_t seed)
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    fs::path dir = out / (std::string(stamp) + "-seed" + std::to_string(seed));
    for (int suffix = 2; fs::exists(dir); ++suffix) dir = out / (std::string(stamp) + "-seed" + std::to_string(seed) + "-" + std::to_string(suffix));
    return dir;
}

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out;

    void attach(CLI::App* app, bool needs_config)
    {
        auto* c = app->add_option("--config", config, "experiment config (JSON)");
        if (needs_config) c->required();
        app->add_option("--seed", seed, "master seed (overrides the config)");
        app->add_option("--workers", workers, "parallel fitness evaluations (default: $EVOACT_WORKERS or all cores)");
        app->add_option("--out", out, "output directory (overrides the config)");
    }

    [[nodiscard]] ExperimentConfig load() const
    {
        ExperimentConfig cfg = load_config(config);
        if (seed) cfg.master_seed = *seed;
        if (!out.empty()) cfg.output = out;
        return cfg;
    }
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Evolve neural-network activation functions with genetic programming"};
    app.require_subcommand(1);

    Common evolve_opts;
    std::optional<int> max_generations;
    bool search_only = false;
    bool quiet = false;
    auto* evolve_cmd = app.add_subcommand("evolve", "run the search and the final comparison");
    evolve_opts.attach(evolve_cmd, true);
    evolve_cmd->add_option("--max-generations", max_generations, "cap the number of generations")->check(CLI::NonNegativeNumber);
    evolve_cmd->add_flag("--search-only", search_only, "stop after the generational loop");
    evolve_cmd->add_flag("--quiet", quiet, "no per-generation progress");

    Common baseline_opts;
    std::string activation;
    std::string init;
    auto* baseline_cmd = app.add_subcommand("baseline", "train and test one baseline activation");
    baseline_opts.attach(baseline_cmd, true);
    baseline_cmd->add_option("--activation", activation, "relu, elu or selu")->required();
    baseline_cmd->add_option("--init", init, "weight initialization (default depends on the activation)");

    std::vector<std::string> sample_files;
    bool csv_output = false;
    auto* compare_cmd = app.add_subcommand("compare", "Tukey HSD across samples.csv files");
    compare_cmd->add_option("files", sample_files, "samples.csv files from evolve or baseline runs")->required();
    compare_cmd->add_flag("--csv", csv_output, "machine-readable output");

    std::string tree_text;
    auto* props_cmd = app.add_subcommand("props", "print the shape properties of an activation tree");
    props_cmd->add_option("tree", tree_text, "tree such as \"(sub x (abs x))\"")->required();

    std::string synth_kind = "moons";
    std::size_t synth_n = 1000;
    double synth_noise = 0.2;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset as CSV");
    synth_cmd->add_option("--kind", synth_kind, "xor, moons or sine_regression");
    synth_cmd->add_option("-n", synth_n, "rows");
    synth_cmd->add_option("--noise", synth_noise, "noise level");
    synth_cmd->add_option("--seed", synth_seed, "seed");
    synth_cmd->add_option("--out", synth_out, "output file (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*evolve_cmd) {
            const ExperimentConfig cfg = evolve_opts.load();
            const fs::path dir = run_directory(cfg.output, cfg.master_seed);
            EvolveOptions opts;
            opts.workers = resolve_workers(evolve_opts.workers);
            opts.max_generations = max_generations;
            opts.search_only = search_only;
            if (!quiet) {
                opts.progress = [](const GenerationStats& s) {
                    std::cerr << "gen " << s.generation << "  best " << format_number(s.best_fitness) << "  mean "
                              << format_number(s.mean_fitness) << "  failed " << s.failed << '\n';
                };
            }
            std::cerr << "run directory: " << dir.string() << "  (seed " << cfg.master_seed << ", " << opts.workers << " workers)\n";
            const auto outcome = cmd_evolve(cfg, dir, opts);
            if (outcome.report) std::cout << report_csv(outcome.report->functions);
            std::cout << dir.string() << '\n';
        } else if (*baseline_cmd) {
            const ExperimentConfig cfg = baseline_opts.load();
            Baseline b;
            std::optional<InitScheme> scheme;
            try {
                b = baseline_from_name(activation);
            } catch (const std::invalid_argument& e) {
                throw ConfigError("--activation", e.what());
            }
            if (!init.empty()) scheme = init_scheme_from_name(init);
            const fs::path dir = run_directory(cfg.output, cfg.master_seed);
            const FunctionReport report = cmd_baseline(cfg, b, scheme, dir, resolve_workers(baseline_opts.workers));
            std::cout << report_csv({report}) << dir.string() << '\n';
        } else if (*compare_cmd) {
            const std::vector<fs::path> files(sample_files.begin(), sample_files.end());
            const auto rows = cmd_compare(files);
            std::cout << (csv_output ? significance_csv(rows) : format_significance_table(rows));
        } else if (*props_cmd) {
            std::cout << cmd_props(tree_text);
        } else if (*synth_cmd) {
            SynthKind kind;
            try {
                kind = synth_kind_from_name(synth_kind);
            } catch (const std::invalid_argument& e) {
                throw ConfigError("--kind", e.what());
            }
            Rng rng = derive(synth_seed, {{"synth", 0}});
            const std::string csv = write_dataset_csv(synth(kind, synth_n, synth_noise, rng));
            if (synth_out.empty()) std::cout << csv;
            else write_file_atomic(synth_out, csv);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
