#pragma once

// End-to-end experiment driver: config parsing and validation, the evolve / baseline /
// compare / props / synth commands, and the report artifacts they emit.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "evoact/activation.hpp"
#include "evoact/dataio.hpp"
#include "evoact/error.hpp"
#include "evoact/evolution.hpp"
#include "evoact/genome.hpp"
#include "evoact/network.hpp"
#include "evoact/properties.hpp"
#include "evoact/stats.hpp"

namespace evoact {

struct DatasetConfig {
    std::optional<std::filesystem::path> path;
    DatasetSchema schema;
    std::optional<SynthKind> synth;
    std::size_t synth_n = 1000;
    double synth_noise = 0.2;
    std::uint64_t synth_seed = 0;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    std::vector<int> hidden{16};
    double dropout = 0.0;
    bool l2 = false;
    double l2_lambda = 0.01;
    EvolutionConfig evolution;
    TrainConfig training;
    SplitSpec split;
    std::uint64_t master_seed = 0;
    std::filesystem::path output = "runs";
};

namespace detail {

using nlohmann::json;

class ConfigReader {
public:
    ConfigReader(const json& node, std::string path) : node_(node), path_(std::move(path))
    {
        if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
    }

    template <class T>
    void read(const char* key, T& out)
    {
        seen_.insert(key);
        const auto it = node_.find(key);
        if (it == node_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw ConfigError(field(key), "has the wrong type");
        }
    }

    [[nodiscard]] bool has(const char* key) const { return node_.contains(key); }

    ConfigReader child(const char* key)
    {
        seen_.insert(key);
        return ConfigReader(node_.at(key), field(key));
    }

    [[nodiscard]] std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    // Unknown keys are rejected so typos do not silently fall back to defaults.
    void finish() const
    {
        for (const auto& [key, value] : node_.items()) {
            if (seen_.count(key) == 0) throw ConfigError(field(key), "unknown key");
        }
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void require(bool ok, const std::string& field, const std::string& message)
{
    if (!ok) throw ConfigError(field, message);
}

} // namespace detail

// Every field defaults to the published protocol; a minimal config names only the dataset.
[[nodiscard]] inline ExperimentConfig parse_config(const nlohmann::json& root, const std::filesystem::path& base_dir = {})
{
    using detail::require;
    ExperimentConfig cfg;
    detail::ConfigReader top(root, "");
    require(top.has("dataset"), "dataset", "is required");

    {
        auto ds = top.child("dataset");
        std::string synth, path, kind = "binary", scaling = "standardize";
        ds.read("synth", synth);
        ds.read("path", path);
        ds.read("n", cfg.dataset.synth_n);
        ds.read("noise", cfg.dataset.synth_noise);
        ds.read("seed", cfg.dataset.synth_seed);
        ds.read("target", cfg.dataset.schema.target);
        ds.read("kind", kind);
        ds.read("categorical", cfg.dataset.schema.categorical);
        ds.read("classes", cfg.dataset.schema.classes);
        ds.read("ignore", cfg.dataset.schema.ignore);
        ds.read("scaling", scaling);
        ds.finish();
        require(synth.empty() != path.empty(), "dataset", "exactly one of 'synth' or 'path' is required");
        if (!synth.empty()) {
            try {
                cfg.dataset.synth = synth_kind_from_name(synth);
            } catch (const std::invalid_argument& e) {
                throw ConfigError("dataset.synth", e.what());
            }
            require(cfg.dataset.synth_n >= 4, "dataset.n", "must be >= 4");
            require(cfg.dataset.synth_noise >= 0.0, "dataset.noise", "must be >= 0");
        } else {
            std::filesystem::path p(path);
            cfg.dataset.path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
            require(!cfg.dataset.schema.target.empty(), "dataset.target", "is required for CSV datasets");
            if (kind == "binary") cfg.dataset.schema.kind = TargetKind::binary;
            else if (kind == "multiclass") cfg.dataset.schema.kind = TargetKind::multiclass;
            else if (kind == "regression") cfg.dataset.schema.kind = TargetKind::regression;
            else throw ConfigError("dataset.kind", "must be binary, multiclass or regression");
        }
        if (scaling == "standardize") cfg.dataset.schema.scaling = Scaling::standardize;
        else if (scaling == "minmax_01") cfg.dataset.schema.scaling = Scaling::minmax_01;
        else throw ConfigError("dataset.scaling", "must be standardize or minmax_01");
    }

    if (top.has("network")) {
        auto net = top.child("network");
        net.read("hidden", cfg.hidden);
        net.read("dropout", cfg.dropout);
        net.read("l2", cfg.l2);
        net.read("l2_lambda", cfg.l2_lambda);
        net.finish();
        require(!cfg.hidden.empty(), "network.hidden", "needs at least one layer");
        for (int u : cfg.hidden) require(u >= 1, "network.hidden", "units must be >= 1");
        require(cfg.dropout >= 0.0 && cfg.dropout < 1.0, "network.dropout", "must be in [0,1)");
        require(cfg.l2_lambda >= 0.0, "network.l2_lambda", "must be >= 0");
    }

    if (top.has("evolution")) {
        auto ev = top.child("evolution");
        auto& e = cfg.evolution;
        ev.read("population_size", e.population_size);
        ev.read("generations", e.generations);
        ev.read("elitism", e.elitism);
        ev.read("crossover_rate", e.crossover_rate);
        ev.read("mutation_rate", e.mutation_rate);
        ev.read("init_min_depth", e.init_min_depth);
        ev.read("init_max_depth", e.init_max_depth);
        ev.read("max_depth", e.max_depth);
        ev.read("search_epochs", e.search_epochs);
        ev.read("search_patience", e.search_patience);
        ev.read("final_epochs", e.final_epochs);
        ev.read("repeats", e.repeats);
        ev.read("final_top", e.final_top);
        ev.read("report_best", e.report_best);
        ev.finish();
    }
    cfg.evolution.validate();

    if (top.has("training")) {
        auto tr = top.child("training");
        auto& t = cfg.training;
        tr.read("batch_size", t.batch_size);
        tr.read("learning_rate", t.learning_rate);
        tr.read("beta1", t.adam_beta1);
        tr.read("beta2", t.adam_beta2);
        tr.read("epsilon", t.adam_epsilon);
        tr.read("class_weighting", t.class_weighting);
        tr.finish();
        require(t.batch_size >= 1, "training.batch_size", "must be >= 1");
        require(t.learning_rate > 0.0, "training.learning_rate", "must be > 0");
        require(t.adam_beta1 >= 0.0 && t.adam_beta1 < 1.0, "training.beta1", "must be in [0,1)");
        require(t.adam_beta2 >= 0.0 && t.adam_beta2 < 1.0, "training.beta2", "must be in [0,1)");
        require(t.adam_epsilon > 0.0, "training.epsilon", "must be > 0");
    }

    if (top.has("split")) {
        auto sp = top.child("split");
        sp.read("test_fraction", cfg.split.test_fraction);
        sp.read("validation_fraction", cfg.split.validation_fraction);
        sp.read("seed", cfg.split.seed);
        sp.finish();
        require(cfg.split.test_fraction > 0.0 && cfg.split.test_fraction < 1.0, "split.test_fraction", "must be in (0,1)");
        require(cfg.split.validation_fraction > 0.0 && cfg.split.validation_fraction < 1.0, "split.validation_fraction",
                "must be in (0,1)");
    }

    top.read("seed", cfg.master_seed);
    std::string output;
    top.read("output", output);
    if (!output.empty()) cfg.output = output;
    top.finish();
    return cfg;
}

[[nodiscard]] inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open '" + path.string() + "'");
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("--config", std::string("not valid JSON: ") + e.what());
    }
    return parse_config(root, path.parent_path());
}

[[nodiscard]] inline Dataset load_dataset(const DatasetConfig& cfg)
{
    if (cfg.synth) {
        Rng rng = derive(cfg.synth_seed, {{"synth", 0}});
        return synth(*cfg.synth, cfg.synth_n, cfg.synth_noise, rng);
    }
    return load_csv(cfg.path->string(), cfg.schema);
}

// Dataset, scaling and split, fixed for the whole experiment.
struct PreparedExperiment {
    ExperimentData data;
    Problem problem;

    explicit PreparedExperiment(const ExperimentConfig& cfg) : data(load_dataset(cfg.dataset), cfg.dataset.schema.scaling, cfg.split)
    {
        problem.data = &data;
        NetworkSpec& net = problem.network;
        net.input_dim = data.input_dim();
        net.hidden = cfg.hidden;
        net.dropout_rate = cfg.dropout;
        net.l2_enabled = cfg.l2;
        net.l2_lambda = cfg.l2_lambda;
        net.output = output_kind_for(data.kind());
        net.output_units = net.output == OutputKind::softmax ? data.n_classes() : 1;
        net.validate();
        problem.training = cfg.training;
        problem.training.fitness_metric = fitness_metric_for(data.kind());
    }

    PreparedExperiment(const PreparedExperiment&) = delete;
    PreparedExperiment& operator=(const PreparedExperiment&) = delete;
};

// Shortest round-trip decimal; "nan"/"inf" for non-finite values.
[[nodiscard]] inline std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Writes through a sibling temporary and renames, so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw Error("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline std::string write_dataset_csv(const Dataset& ds)
{
    std::ostringstream out;
    for (const auto& f : ds.feature_names) out << csv_escape(f) << ',';
    out << "target\n";
    for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
        for (Eigen::Index j = 0; j < ds.x.cols(); ++j) out << format_number(ds.x(i, j)) << ',';
        if (ds.kind == TargetKind::regression) out << format_number(ds.y(i));
        else out << ds.class_labels[static_cast<std::size_t>(ds.y(i))];
        out << '\n';
    }
    return out.str();
}

[[nodiscard]] inline std::string props_csv_header() { return "generation,zero_on_nonpositive,monotone,upper_unbounded,lower_unbounded\n"; }

[[nodiscard]] inline std::string props_csv_row(const GenerationStats& s)
{
    const auto& f = s.fractions;
    return std::to_string(s.generation) + "," + format_number(f.zero_on_nonpositive) + "," + format_number(f.monotone_nondecreasing) +
           "," + format_number(f.upper_unbounded) + "," + format_number(f.lower_unbounded) + "\n";
}

[[nodiscard]] inline nlohmann::json generation_json(const GenerationStats& s)
{
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"gen", s.generation},
            {"best_fitness", num(s.best_fitness)},
            {"mean_fitness", num(s.mean_fitness)},
            {"failed", s.failed},
            {"property_fractions",
             {{"monotone", s.fractions.monotone_nondecreasing},
              {"zero_on_nonpositive", s.fractions.zero_on_nonpositive},
              {"upper_unbounded", s.fractions.upper_unbounded},
              {"lower_unbounded", s.fractions.lower_unbounded}}}};
}

[[nodiscard]] inline std::string report_csv(const std::vector<FunctionReport>& functions)
{
    std::string out = "function,init_scheme,metric,mean,std\n";
    for (const auto& f : functions) {
        for (std::size_t k = 0; k < f.metric_names.size(); ++k) {
            const Summary s = summarize(f.samples[k]);
            out += csv_escape(f.candidate.label) + "," + std::string(name(f.candidate.init)) + "," + f.metric_names[k] + "," +
                   format_number(s.mean) + "," + format_number(s.stddev) + "\n";
        }
    }
    return out;
}

[[nodiscard]] inline std::string samples_csv(const std::vector<FunctionReport>& functions)
{
    std::string out = "function,init_scheme,metric,run,value\n";
    for (const auto& f : functions) {
        for (std::size_t k = 0; k < f.metric_names.size(); ++k) {
            for (std::size_t r = 0; r < f.samples[k].size(); ++r) {
                out += csv_escape(f.candidate.label) + "," + std::string(name(f.candidate.init)) + "," + f.metric_names[k] + "," +
                       std::to_string(r) + "," + format_number(f.samples[k][r]) + "\n";
            }
        }
    }
    return out;
}

// One group of repeated-run samples for one metric.
struct SampleGroup {
    std::string label; // "<function> [<init>]"
    bool baseline = false;
    std::map<std::string, std::vector<double>> metrics;
};

struct SignificanceRow {
    std::string metric;
    std::string first;
    std::string second;
    double mean_diff = 0.0;
    double q = 0.0;
    double p = 1.0;
};

[[nodiscard]] inline bool is_baseline_label(const std::string& function)
{
    static const std::string suffix = "(baseline)";
    return function.size() >= suffix.size() && function.compare(function.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Tukey HSD per metric over all groups. When evolved and baseline groups are both present
// only evolved-vs-baseline pairs are reported; otherwise every pair is.
[[nodiscard]] inline std::vector<SignificanceRow> significance(const std::vector<SampleGroup>& groups)
{
    std::vector<SignificanceRow> rows;
    if (groups.size() < 2) return rows;
    const bool mixed = std::any_of(groups.begin(), groups.end(), [](const auto& g) { return g.baseline; }) &&
                       std::any_of(groups.begin(), groups.end(), [](const auto& g) { return !g.baseline; });
    for (const auto& [metric, unused] : groups.front().metrics) {
        std::vector<RunReport> reports;
        std::vector<const SampleGroup*> used;
        for (const auto& g : groups) {
            const auto it = g.metrics.find(metric);
            if (it == g.metrics.end() || it->second.size() < 2) continue;
            if (std::any_of(it->second.begin(), it->second.end(), [](double v) { return !std::isfinite(v); })) continue;
            reports.push_back({g.label, it->second});
            used.push_back(&g);
        }
        if (reports.size() < 2) continue;
        const auto results = tukey_hsd(reports);
        std::size_t idx = 0;
        for (std::size_t i = 0; i < reports.size(); ++i) {
            for (std::size_t j = i + 1; j < reports.size(); ++j, ++idx) {
                const auto& r = results[idx];
                const bool bi = used[i]->baseline;
                const bool bj = used[j]->baseline;
                if (mixed && bi == bj) continue;
                // Evolved function first.
                if (mixed && bi) rows.push_back({metric, r.second, r.first, -r.mean_difference, r.q, r.p_value});
                else rows.push_back({metric, r.first, r.second, r.mean_difference, r.q, r.p_value});
            }
        }
    }
    return rows;
}

[[nodiscard]] inline std::vector<SampleGroup> groups_from(const std::vector<FunctionReport>& functions)
{
    std::vector<SampleGroup> groups;
    for (const auto& f : functions) {
        SampleGroup g;
        g.label = f.candidate.label + " [" + std::string(name(f.candidate.init)) + "]";
        g.baseline = f.candidate.baseline;
        for (std::size_t k = 0; k < f.metric_names.size(); ++k) g.metrics[f.metric_names[k]] = f.samples[k];
        groups.push_back(std::move(g));
    }
    return groups;
}

[[nodiscard]] inline std::string significance_csv(const std::vector<SignificanceRow>& rows)
{
    std::string out = "metric,pair,mean_diff,q,p\n";
    for (const auto& r : rows) {
        out += r.metric + "," + csv_escape(r.first + " vs " + r.second) + "," + format_number(r.mean_diff) + "," + format_number(r.q) + "," +
               format_number(r.p) + "\n";
    }
    return out;
}

// Display form used in printed tables: p below 0.001 shows as "< .001".
[[nodiscard]] inline std::string format_p_value(double p)
{
    if (p < 0.001) return "< .001";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", p);
    return buf;
}

[[nodiscard]] inline std::string history_jsonl(const std::vector<FunctionReport>& functions)
{
    std::string out;
    for (const auto& f : functions) {
        for (const auto& r : f.first_history) {
            nlohmann::json line = {{"function", f.candidate.label}, {"epoch", r.epoch}};
            line["train_loss"] = std::isfinite(r.train_loss) ? nlohmann::json(r.train_loss) : nlohmann::json(nullptr);
            line["val_fitness"] = std::isfinite(r.val_fitness) ? nlohmann::json(r.val_fitness) : nlohmann::json(nullptr);
            out += line.dump() + "\n";
        }
    }
    return out;
}

struct EvolveOptions {
    int workers = 1;
    std::optional<int> max_generations; // caps evolution.generations
    bool search_only = false;           // stop after the generational loop (no final phase)
    std::function<void(const GenerationStats&)> progress;
};

struct EvolveOutcome {
    EvolutionResult evolution;
    std::optional<FinalReport> report;
    std::filesystem::path dir;
};

// Writes log.jsonl, props.csv and, after the final phase, best.txt, report.csv,
// samples.csv, significance.csv and history.jsonl into `run_dir`.
[[nodiscard]] inline EvolveOutcome cmd_evolve(const ExperimentConfig& cfg, const std::filesystem::path& run_dir, const EvolveOptions& opts = {})
{
    EvolutionConfig ev = cfg.evolution;
    if (opts.max_generations) ev.generations = std::min(ev.generations, *opts.max_generations);
    ev.validate();
    PreparedExperiment prepared(cfg);
    std::filesystem::create_directories(run_dir);

    nlohmann::json header = {{"master_seed", cfg.master_seed},
                             {"population_size", ev.population_size},
                             {"generations", ev.generations},
                             {"elitism", ev.elitism},
                             {"crossover_rate", ev.crossover_rate},
                             {"mutation_rate", ev.mutation_rate},
                             {"train_rows", prepared.data.final_train().rows()},
                             {"validation_rows", prepared.data.final_validation().rows()},
                             {"test_rows", prepared.data.test().rows()}};
    std::string log = header.dump() + "\n";
    std::string props = props_csv_header();

    EvolveOutcome outcome;
    outcome.dir = run_dir;
    const SearchEvaluator evaluator(prepared.problem, ev, cfg.master_seed, opts.workers);
    outcome.evolution = evolve(
        ev, cfg.master_seed, [&](const std::vector<Chromosome>& c, int g, std::size_t first) { return evaluator(c, g, first); },
        [&](const GenerationStats& s, const Population&) {
            log += generation_json(s).dump() + "\n";
            props += props_csv_row(s);
            write_file_atomic(run_dir / "log.jsonl", log);
            write_file_atomic(run_dir / "props.csv", props);
            if (opts.progress) opts.progress(s);
        });
    if (opts.search_only) return outcome;

    FinalReport report = finalize(outcome.evolution.final_population, prepared.problem, ev, cfg.master_seed, opts.workers);
    std::string best;
    for (const auto& f : report.functions) {
        if (f.candidate.baseline) continue;
        best += to_string(Chromosome{std::get<ActivationTree>(f.candidate.activation), f.candidate.init}) + "\n";
    }
    write_file_atomic(run_dir / "best.txt", best);
    write_file_atomic(run_dir / "report.csv", report_csv(report.functions));
    write_file_atomic(run_dir / "samples.csv", samples_csv(report.functions));
    write_file_atomic(run_dir / "significance.csv", significance_csv(significance(groups_from(report.functions))));
    write_file_atomic(run_dir / "history.jsonl", history_jsonl(report.functions));
    outcome.report = std::move(report);
    return outcome;
}

// Trains and tests one baseline `repeats` times on the deterministic split.
[[nodiscard]] inline FunctionReport cmd_baseline(const ExperimentConfig& cfg, Baseline baseline, std::optional<InitScheme> init,
                                                 const std::filesystem::path& run_dir, int workers = 1)
{
    PreparedExperiment prepared(cfg);
    const std::vector<Candidate> candidates{Candidate::of(baseline, init.value_or(default_init(baseline)))};
    auto reports = test_candidates(candidates, prepared.problem, cfg.evolution, cfg.master_seed, workers);
    std::filesystem::create_directories(run_dir);
    write_file_atomic(run_dir / "report.csv", report_csv(reports));
    write_file_atomic(run_dir / "samples.csv", samples_csv(reports));
    write_file_atomic(run_dir / "history.jsonl", history_jsonl(reports));
    return std::move(reports.front());
}

// Reads samples.csv files (function,init_scheme,metric,run,value). Groups are per file
// and function; labels that repeat across files are prefixed with the file name.
[[nodiscard]] inline std::vector<SampleGroup> read_sample_files(const std::vector<std::filesystem::path>& files)
{
    if (files.size() < 2) throw MismatchedMetrics("compare needs at least two sample files");
    std::vector<std::vector<SampleGroup>> per_file;
    std::optional<std::set<std::string>> metric_set;
    for (const auto& path : files) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError(DataError::Kind::empty_file, "cannot open '" + path.string() + "'");
        const auto records = read_csv_records(in);
        if (records.size() < 2) throw MismatchedMetrics("'" + path.string() + "' holds no samples");
        const std::vector<std::string> expected{"function", "init_scheme", "metric", "run", "value"};
        if (records.front() != expected) throw MismatchedMetrics("'" + path.string() + "' is not a samples file");
        std::vector<SampleGroup> groups;
        std::set<std::string> metrics;
        for (std::size_t r = 1; r < records.size(); ++r) {
            const auto& rec = records[r];
            if (rec.size() != 5) throw DataError(DataError::Kind::malformed, "'" + path.string() + "' row " + std::to_string(r) + " is malformed");
            const std::string label = rec[0] + " [" + rec[1] + "]";
            auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.label == label; });
            if (it == groups.end()) {
                groups.push_back({label, is_baseline_label(rec[0]), {}});
                it = groups.end() - 1;
            }
            double v;
            if (rec[4] == "nan") v = std::nan("");
            else if (!detail::parse_double(rec[4], v))
                throw DataError(DataError::Kind::non_numeric_cell, "'" + path.string() + "' row " + std::to_string(r) + ": bad value");
            it->metrics[rec[2]].push_back(v);
            metrics.insert(rec[2]);
        }
        if (metric_set && *metric_set != metrics) throw MismatchedMetrics("'" + path.string() + "' reports different metrics");
        metric_set = metrics;
        per_file.push_back(std::move(groups));
    }
    std::map<std::string, int> seen;
    for (const auto& groups : per_file) {
        for (const auto& g : groups) ++seen[g.label];
    }
    std::vector<SampleGroup> all;
    for (std::size_t f = 0; f < per_file.size(); ++f) {
        for (auto g : per_file[f]) {
            if (seen[g.label] > 1) g.label = files[f].filename().string() + "#" + std::to_string(f + 1) + ": " + g.label;
            all.push_back(std::move(g));
        }
    }
    return all;
}

[[nodiscard]] inline std::vector<SignificanceRow> cmd_compare(const std::vector<std::filesystem::path>& files)
{
    return significance(read_sample_files(files));
}

[[nodiscard]] inline std::string format_significance_table(const std::vector<SignificanceRow>& rows)
{
    std::ostringstream out;
    out << "metric\tpair\tmean_diff\tq\tp\n";
    for (const auto& r : rows) {
        char diff[32], q[32];
        std::snprintf(diff, sizeof diff, "%.4f", r.mean_diff);
        std::snprintf(q, sizeof q, "%.3f", r.q);
        out << r.metric << '\t' << r.first << " vs " << r.second << '\t' << diff << '\t' << q << '\t' << format_p_value(r.p) << '\n';
    }
    return out.str();
}

[[nodiscard]] inline std::string cmd_props(std::string_view tree_text)
{
    const ActivationTree tree = parse_tree(tree_text);
    const PropertyReport rep = analyze_report([&tree](double x) { return eval(tree, x); });
    auto flag = [](bool b) { return b ? "T" : "F"; };
    std::ostringstream out;
    out << "tree: " << to_string(tree) << '\n'
        << "monotone=" << flag(rep.flags.monotone_nondecreasing) << " zero_on_nonpositive=" << flag(rep.flags.zero_on_nonpositive)
        << " upper=" << flag(rep.flags.upper_unbounded) << " lower=" << flag(rep.flags.lower_unbounded) << '\n';
    auto probes = [&](const char* title, const std::vector<Probe>& ps) {
        out << title << ':';
        for (const auto& p : ps) out << "  f(" << format_number(p.x) << ")=" << (p.fx ? format_number(*p.fx) : std::string("non-finite"));
        out << '\n';
    };
    probes("upper probes", rep.upper_probes);
    probes("lower probes", rep.lower_probes);
    return out.str();
}

} // namespace evoact
