// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "evoact/experiment.hpp"
#include "oracles.hpp"

using namespace evoact;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kDerivativeTol = 1e-5;
constexpr double kDerivativeSeconds = 10.0;
constexpr double kBackpropTol = 1e-4;
constexpr double kBackpropSeconds = 30.0;
constexpr int kXorRequired = 19;
constexpr double kXorSeconds = 60.0;
constexpr double kF1Margin = 0.02;
constexpr double kDeskSeconds = 15.0 * 60.0;
constexpr double kCriticalTol = 0.01;
constexpr double kReferencePTol = 0.005;
constexpr double kFrequencyTol = 0.02;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("evoact_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Outcome derivative_oracle()
{
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng = derive(2024, {{"acceptance-derivative", 0}});
    double worst = 0.0;
    int checked = 0;
    for (int t = 0; t < 100; ++t) {
        const auto tree = random_tree(rng, 1, 6);
        int points = 0;
        for (int attempt = 0; points < 20 && attempt < 5000; ++attempt) {
            const double x = rng.uniform(-5.0, 5.0);
            if (!oracle::safe_point(tree, x)) continue;
            ++points;
            ++checked;
            worst = std::max(worst, oracle::derivative_error(tree, x));
        }
    }
    const double secs = seconds_since(t0);
    return {worst < kDerivativeTol && secs < kDerivativeSeconds && checked >= 1000,
            std::to_string(checked) + " points, max rel err " + fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s"};
}

bool is_smooth(const ActivationTree& tree)
{
    for (Primitive p : tree.nodes()) {
        if (p == Primitive::relu || p == Primitive::leaky_relu || p == Primitive::abs || p == Primitive::max || p == Primitive::min ||
            p == Primitive::elu)
            return false;
    }
    return true;
}

Outcome backprop_oracle()
{
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng = derive(2024, {{"acceptance-backprop", 0}});
    double worst = 0.0;
    std::string trees;
    for (int n = 0; n < 5;) {
        const auto tree = random_tree(rng, 2, 4);
        if (!is_smooth(tree)) continue;
        NetworkSpec spec;
        spec.input_dim = 3;
        spec.hidden = {8, 8};
        HiddenActivation act(tree);
        const Model model = initialize_model(spec, InitScheme::glorot_normal, rng);
        Eigen::MatrixXd x(12, 3);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        Eigen::VectorXd y(12);
        for (int i = 0; i < 12; ++i) y(i) = static_cast<double>(rng.below(2));
        double err;
        try {
            err = oracle::backprop_error(model, spec, act, x, y, {});
        } catch (const NonFinite&) {
            continue;
        }
        worst = std::max(worst, err);
        trees += (n ? ", " : "") + to_string(tree);
        ++n;
    }
    const double secs = seconds_since(t0);
    return {worst < kBackpropTol && secs < kBackpropSeconds,
            "max rel err " + fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s; trees " + trees};
}

Outcome xor_trainability()
{
    const auto t0 = std::chrono::steady_clock::now();
    Rng data_rng(0);
    const Dataset ds = synth(SynthKind::xor_clusters, 4, 0.0, data_rng);
    const Samples data{ds.x, ds.y};
    NetworkSpec spec;
    spec.input_dim = 2;
    spec.hidden = {8};
    TrainConfig cfg;
    cfg.max_epochs = 2000;
    cfg.patience.reset();
    cfg.learning_rate = 0.01;
    int solved = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        HiddenActivation act(parse_tree("(tanh x)"));
        Rng rng = derive(seed, {{"xor", 0}});
        const auto trained = train(spec, act, InitScheme::glorot_uniform, data, data, cfg, rng);
        solved += metric_value(evaluate(trained.model, spec, act, data), "accuracy") == 1.0;
    }
    const double secs = seconds_since(t0);
    return {solved >= kXorRequired && secs < kXorSeconds, std::to_string(solved) + "/20 solved, " + fmt("%.2f", secs) + " s"};
}

ExperimentConfig desk_config()
{
    return parse_config(nlohmann::json::parse(R"({
        "dataset": {"synth": "moons", "n": 1000, "noise": 0.2, "seed": 7},
        "network": {"hidden": [16]},
        "evolution": {"population_size": 20, "generations": 10},
        "seed": 1
    })"));
}

struct DeskRuns {
    EvolveOutcome one;
    fs::path dir_one;
    fs::path dir_two;
    double seconds_one = 0.0;
};

DeskRuns& desk_runs()
{
    static DeskRuns runs = [] {
        DeskRuns r;
        const auto cfg = desk_config();
        r.dir_one = scratch("desk_w1") / "run";
        r.dir_two = scratch("desk_w2") / "run";
        EvolveOptions opts;
        opts.workers = 1;
        const auto t0 = std::chrono::steady_clock::now();
        r.one = cmd_evolve(cfg, r.dir_one, opts);
        r.seconds_one = seconds_since(t0);
        opts.workers = 2;
        (void)cmd_evolve(cfg, r.dir_two, opts);
        return r;
    }();
    return runs;
}

double mean_of(const std::vector<double>& v) { return summarize(v).mean; }

Outcome desk_evolution()
{
    const auto& runs = desk_runs();
    const auto& functions = runs.one.report->functions;
    const FunctionReport* relu = nullptr;
    for (const auto& f : functions)
        if (f.candidate.label == "ReLU (baseline)") relu = &f;
    const double evolved = mean_of(functions.front().validation_samples);
    const double baseline = mean_of(relu->validation_samples);
    bool monotone = true;
    double best = kWorstFitness;
    for (const auto& s : runs.one.evolution.history) {
        monotone = monotone && s.best_fitness >= best;
        best = std::max(best, s.best_fitness);
    }
    const bool pass = evolved >= baseline - kF1Margin && monotone && runs.seconds_one < kDeskSeconds;
    return {pass, "best evolved " + functions.front().candidate.label + " val F1 " + fmt("%.4f", evolved) + " vs ReLU " +
                      fmt("%.4f", baseline) + ", trace " + (monotone ? "monotone" : "NOT monotone") + ", " + fmt("%.1f", runs.seconds_one) + " s"};
}

Outcome property_vectors()
{
    auto vec = [](bool m, bool z, bool u, bool l) { return PropertyVector{m, z, u, l}; };
    const bool relu = analyze(parse_tree("(relu x)")) == vec(true, true, true, false);
    const bool tanh = analyze(parse_tree("(tanh x)")) == vec(true, false, false, false);
    const bool cos = analyze(parse_tree("(cos x)")) == vec(false, false, false, false);
    const bool kink = analyze(parse_tree("(sub x (abs x))")) == vec(true, false, false, true);
    const bool selu = analyze_function([](double x) { return scalar::selu(x); }) == vec(true, false, true, false);
    std::string detail;
    for (auto [name, ok] : {std::pair{"relu", relu}, {"tanh", tanh}, {"cos", cos}, {"x-|x|", kink}, {"selu", selu}})
        detail += std::string(name) + (ok ? " ok " : " MISMATCH ");
    return {relu && tanh && cos && kink && selu, detail};
}

Outcome tukey_oracle()
{
    const double q = studentized_range_critical(0.05, 3, 10);
    std::ifstream in(std::string(EVOACT_TEST_DATA) + "/tukey_reference.json");
    if (!in) return {false, "missing tukey_reference.json"};
    const auto ref = nlohmann::json::parse(in);
    double worst = 0.0;
    int cases = 0;
    for (const auto& c : ref["cases"]) {
        std::vector<RunReport> groups;
        for (const auto& g : c["groups"]) groups.push_back({"g" + std::to_string(groups.size()), g.get<std::vector<double>>()});
        const auto res = tukey_hsd(groups);
        std::size_t k = 0;
        for (const auto& pair : c["pairs"]) worst = std::max(worst, std::abs(res[k++].p_value - pair["p"].get<double>()));
        ++cases;
    }
    Rng rng(3);
    std::vector<double> g;
    for (int i = 0; i < 30; ++i) g.push_back(rng.normal());
    const std::vector<RunReport> same{{"a", g}, {"b", g}, {"c", g}};
    bool identical = true;
    for (const auto& r : tukey_hsd(same)) identical = identical && r.p_value == 1.0;
    return {std::abs(q - 3.877) <= kCriticalTol && worst < kReferencePTol && cases == 20 && identical,
            "q(0.05,3,10) = " + fmt("%.4f", q) + ", max |dp| " + fmt("%.2e", worst) + " over " + std::to_string(cases) +
                " cases, identical groups " + (identical ? "p = 1" : "p != 1")};
}

Outcome bloat_fuzz()
{
    Rng rng = derive(2024, {{"acceptance-bloat", 0}});
    EvolutionConfig cfg;
    cfg.population_size = 50;
    Population pop;
    for (int i = 0; i < 50; ++i) pop.push_back({random_chromosome(rng, 1, 4), rng.uniform(), {}});
    int too_deep = 0;
    int shrink_failures = 0;
    int max_depth = 0;
    for (int cycle = 0; cycle < 1000; ++cycle) {
        auto kids = breed(pop, cfg, 50, rng);
        for (std::size_t i = 0; i < kids.size(); ++i) {
            const auto& c = kids[i];
            max_depth = std::max(max_depth, c.tree.depth());
            too_deep += c.tree.depth() > kMaxTreeDepth;
            if (c.tree.size() > 1 && mutate_shrink(c, rng).tree.size() >= c.tree.size()) ++shrink_failures;
            pop[i] = {c, rng.uniform(), {}};
        }
    }
    return {too_deep == 0 && shrink_failures == 0, "50000 offspring, max depth " + std::to_string(max_depth) + ", " +
                                                       std::to_string(too_deep) + " over limit, " + std::to_string(shrink_failures) +
                                                       " non-shrinking shrinks"};
}

Outcome rank_selection()
{
    Rng rng = derive(2024, {{"acceptance-rank", 0}});
    Population pop;
    for (double f : {0.5, 0.1, 0.9, 0.3, 0.7}) pop.push_back({Chromosome{}, f, {}});
    const double expected[] = {3, 1, 5, 2, 4};
    std::vector<int> counts(5, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[rank_select_index(pop, rng)];
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) worst = std::max(worst, std::abs(counts[k] / double(n) - expected[k] / 15.0));
    return {worst <= kFrequencyTol, "max |freq - k/15| = " + fmt("%.4f", worst)};
}

Outcome reproducibility()
{
    const auto& runs = desk_runs();
    const bool report = slurp(runs.dir_one / "report.csv") == slurp(runs.dir_two / "report.csv");
    const bool props = slurp(runs.dir_one / "props.csv") == slurp(runs.dir_two / "props.csv");
    const bool nonempty = !slurp(runs.dir_one / "report.csv").empty() && !slurp(runs.dir_one / "props.csv").empty();
    return {report && props && nonempty, std::string("workers 1 vs 2: report.csv ") + (report ? "identical" : "DIFFERS") + ", props.csv " +
                                             (props ? "identical" : "DIFFERS")};
}

// Electricity-schema stand-in: same columns and label set, synthetic values.
void write_electricity_surrogate(const fs::path& path, int rows)
{
    Rng rng = derive(2024, {{"electricity-surrogate", 0}});
    std::ofstream out(path);
    out << "date,day,period,nswprice,nswdemand,vicprice,vicdemand,transfer,class\n";
    for (int i = 0; i < rows; ++i) {
        const double period = (i % 48) / 47.0;
        const double demand = std::clamp(0.4 + 0.2 * std::sin(6.283 * period) + 0.1 * rng.normal(), 0.0, 1.0);
        const double price = std::clamp(0.06 + 0.05 * demand + 0.02 * rng.normal(), 0.0, 1.0);
        const double vicprice = std::clamp(0.003 + 0.01 * rng.uniform(), 0.0, 1.0);
        const double vicdemand = std::clamp(0.42 + 0.1 * rng.normal(), 0.0, 1.0);
        const double transfer = std::clamp(0.41 + 0.2 * rng.normal(), 0.0, 1.0);
        const bool up = price + 0.02 * rng.normal() > 0.06 + 0.05 * 0.4;
        out << format_number(i / double(rows)) << ',' << (1 + (i / 48) % 7) << ',' << format_number(period) << ','
            << format_number(price) << ',' << format_number(demand) << ',' << format_number(vicprice) << ','
            << format_number(vicdemand) << ',' << format_number(transfer) << ',' << (up ? "UP" : "DOWN") << '\n';
    }
}

Outcome full_scale_smoke()
{
    const fs::path dir = scratch("electricity");
    ExperimentConfig cfg = load_config(fs::path(EVOACT_CONFIG_DIR) / "electricity.json");
    std::string source;
    if (const char* env = std::getenv("EVOACT_ELECTRICITY_CSV"); env && *env) {
        cfg.dataset.path = env;
        source = std::string("Electricity CSV at ") + env;
    } else {
        write_electricity_surrogate(dir / "electricity.csv", 2000);
        cfg.dataset.path = dir / "electricity.csv";
        source = "SURROGATE: no Electricity CSV available offline; ran on a 2000-row synthetic file with the Electricity schema "
                 "(set EVOACT_ELECTRICITY_CSV to use the real data)";
    }
    EvolveOptions opts;
    opts.workers = 1;
    opts.max_generations = 1;
    opts.search_only = true;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const auto outcome = cmd_evolve(cfg, dir / "run", opts);
        const auto& h = outcome.evolution.history;
        const bool ok = h.size() == 2 && outcome.evolution.final_population.size() == 100 && h.back().failed < 100;
        return {ok, source + "; pop " + std::to_string(cfg.evolution.population_size) + ", hidden 4x50, " + std::to_string(h.size() - 1) +
                        " generation(s) after gen 0, best fitness " + format_number(h.back().best_fitness) + ", " +
                        fmt("%.1f", seconds_since(t0)) + " s"};
    } catch (const std::exception& e) {
        return {false, source + "; error: " + e.what()};
    }
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"derivative oracle", derivative_oracle},
        {"backprop oracle", backprop_oracle},
        {"XOR trainability", xor_trainability},
        {"desk-scale evolution on moons", desk_evolution},
        {"property vectors", property_vectors},
        {"Tukey HSD oracle", tukey_oracle},
        {"bloat and structure fuzz", bloat_fuzz},
        {"rank-selection distribution", rank_selection},
        {"reproducibility across worker counts", reproducibility},
        {"full-scale Electricity smoke run", full_scale_smoke},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " (" << criteria[i].first << "): " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
