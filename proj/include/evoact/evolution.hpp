#pragma once

// Generational loop: rank selection, elitism, crossover/shrink mutation with static
// bloat control, two-phase fitness (search vs final) and finalization into a report.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "evoact/dataio.hpp"
#include "evoact/error.hpp"
#include "evoact/genome.hpp"
#include "evoact/network.hpp"
#include "evoact/properties.hpp"
#include "evoact/rng.hpp"
#include "evoact/stats.hpp"

namespace evoact {

struct EvolutionConfig {
    int population_size = 100;
    int generations = 50;
    int elitism = 4;
    double crossover_rate = 0.8;
    double mutation_rate = 0.05;
    int init_min_depth = 1;
    int init_max_depth = 4;
    int max_depth = kMaxTreeDepth;
    int search_epochs = 50;
    int search_patience = 10;
    int final_epochs = 100;
    int repeats = 30;
    int final_top = 10;  // candidates taken from the final generation before deduplication
    int report_best = 3; // evolved functions compared against the baselines

    void validate() const
    {
        auto require = [](bool ok, const char* field, const std::string& msg) {
            if (!ok) throw ConfigError(std::string("evolution.") + field, msg);
        };
        require(population_size >= 1, "population_size", "must be >= 1");
        require(generations >= 0, "generations", "must be >= 0");
        require(elitism >= 0 && elitism <= population_size, "elitism", "must be in [0, population_size]");
        require(crossover_rate >= 0.0 && crossover_rate <= 1.0, "crossover_rate", "must be in [0,1]");
        require(mutation_rate >= 0.0 && mutation_rate <= 1.0, "mutation_rate", "must be in [0,1]");
        require(init_min_depth >= 0, "init_min_depth", "must be >= 0");
        require(init_max_depth >= init_min_depth, "init_max_depth", "must be >= init_min_depth");
        require(max_depth >= init_max_depth, "max_depth", "must be >= init_max_depth");
        require(search_epochs >= 1, "search_epochs", "must be >= 1");
        require(search_patience >= 1, "search_patience", "must be >= 1");
        require(final_epochs >= 1, "final_epochs", "must be >= 1");
        require(repeats >= 1, "repeats", "must be >= 1");
        require(final_top >= 1, "final_top", "must be >= 1");
        require(report_best >= 1, "report_best", "must be >= 1");
    }
};

struct EvaluatedIndividual {
    Chromosome chromosome;
    double fitness = kWorstFitness;
    PropertyVector properties;
};

using Population = std::vector<EvaluatedIndividual>;

// Runs f(0..n-1) on up to `workers` threads. Results must be written by index so the
// outcome does not depend on scheduling. The first exception is rethrown.
template <class F>
void parallel_for(std::size_t n, int workers, F&& f)
{
    const auto threads = static_cast<std::size_t>(std::max(1, workers));
    if (threads == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                f(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(run);
    }
    if (error) std::rethrow_exception(error);
}

// Indices ordered worst to best; equal fitness keeps evaluation order.
[[nodiscard]] inline std::vector<std::size_t> ascending_ranks(const Population& pop)
{
    std::vector<std::size_t> idx(pop.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pop[a].fitness < pop[b].fitness; });
    return idx;
}

// Indices ordered best to worst; equal fitness keeps evaluation order.
[[nodiscard]] inline std::vector<std::size_t> descending_order(const Population& pop)
{
    std::vector<std::size_t> idx(pop.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pop[a].fitness > pop[b].fitness; });
    return idx;
}

// P(member) = rank / sum(ranks), worst rank 1 and best rank N.
[[nodiscard]] inline std::vector<double> rank_probabilities(const Population& pop)
{
    const auto order = ascending_ranks(pop);
    const double n = static_cast<double>(pop.size());
    std::vector<double> p(pop.size());
    for (std::size_t r = 0; r < order.size(); ++r) p[order[r]] = static_cast<double>(r + 1) / (n * (n + 1.0) / 2.0);
    return p;
}

[[nodiscard]] inline std::size_t rank_select_index(const Population& pop, Rng& rng)
{
    if (pop.empty()) throw std::invalid_argument("rank_select: empty population");
    const auto order = ascending_ranks(pop);
    const std::uint64_t n = pop.size();
    std::uint64_t ticket = rng.below(n * (n + 1) / 2); // 0-based position in the rank-weighted pool
    for (std::uint64_t r = 1; r <= n; ++r) {
        if (ticket < r) return order[r - 1];
        ticket -= r;
    }
    return order.back();
}

[[nodiscard]] inline const Chromosome& rank_select(const Population& pop, Rng& rng) { return pop[rank_select_index(pop, rng)].chromosome; }

// Offspring for the non-elite slots: rank-selected pairs, crossover with probability
// crossover_rate (else clones), independent shrink mutation, bloat control.
[[nodiscard]] inline std::vector<Chromosome> breed(const Population& pop, const EvolutionConfig& cfg, std::size_t count, Rng& rng)
{
    std::vector<Chromosome> offspring;
    offspring.reserve(count);
    while (offspring.size() < count) {
        const Chromosome& p1 = rank_select(pop, rng);
        const Chromosome& p2 = rank_select(pop, rng);
        std::pair<Chromosome, Chromosome> kids = rng.bernoulli(cfg.crossover_rate) ? crossover(p1, p2, rng, cfg.max_depth)
                                                                                    : std::pair<Chromosome, Chromosome>{p1, p2};
        const std::pair<const Chromosome&, const Chromosome&> parents{p1, p2};
        for (Chromosome* child : {&kids.first, &kids.second}) {
            if (rng.bernoulli(cfg.mutation_rate)) *child = mutate_shrink(std::move(*child), rng);
            *child = bloat_control(std::move(*child), parents, rng, cfg.max_depth);
        }
        offspring.push_back(std::move(kids.first));
        if (offspring.size() < count) offspring.push_back(std::move(kids.second));
    }
    return offspring;
}

// `evaluate(offspring)` returns one fitness per chromosome. Elites keep their recorded
// fitness and properties.
template <class Evaluate>
[[nodiscard]] Population step_generation(const Population& pop, const EvolutionConfig& cfg, Rng& rng, Evaluate&& evaluate)
{
    const std::size_t n = pop.size();
    const auto elites = static_cast<std::size_t>(std::min<int>(cfg.elitism, static_cast<int>(n)));
    const auto order = descending_order(pop);
    Population next;
    next.reserve(n);
    for (std::size_t i = 0; i < elites; ++i) next.push_back(pop[order[i]]);

    std::vector<Chromosome> offspring = breed(pop, cfg, n - elites, rng);
    const std::vector<double> fitness = evaluate(offspring);
    for (std::size_t i = 0; i < offspring.size(); ++i) {
        EvaluatedIndividual ind;
        ind.properties = analyze(offspring[i].tree);
        ind.chromosome = std::move(offspring[i]);
        ind.fitness = fitness[i];
        next.push_back(std::move(ind));
    }
    return next;
}

struct GenerationStats {
    int generation = 0;
    double best_fitness = kWorstFitness;
    double mean_fitness = 0.0; // over members with finite fitness; NaN when none
    int failed = 0;            // members with worst (non-finite) fitness
    PropertyFractions fractions;
};

[[nodiscard]] inline GenerationStats generation_stats(int generation, const Population& pop)
{
    GenerationStats s;
    s.generation = generation;
    double sum = 0.0;
    int finite = 0;
    std::vector<PropertyVector> props;
    for (const auto& ind : pop) {
        s.best_fitness = std::max(s.best_fitness, ind.fitness);
        if (std::isfinite(ind.fitness)) {
            sum += ind.fitness;
            ++finite;
        } else {
            ++s.failed;
        }
        props.push_back(ind.properties);
    }
    s.mean_fitness = finite > 0 ? sum / finite : std::nan("");
    s.fractions = population_fractions(props);
    return s;
}

struct EvolutionResult {
    std::vector<GenerationStats> history;
    Population final_population;
};

// Generation 0 is the random initial population; then `cfg.generations` steps.
// `evaluate(chromosomes, generation, first_slot)` returns fitness per chromosome.
template <class Evaluate, class OnGeneration>
[[nodiscard]] EvolutionResult evolve(const EvolutionConfig& cfg, std::uint64_t master_seed, Evaluate&& evaluate, OnGeneration&& on_generation)
{
    cfg.validate();
    EvolutionResult result;
    Rng init_rng = derive(master_seed, {{"init", 0}});
    std::vector<Chromosome> initial;
    for (int i = 0; i < cfg.population_size; ++i) initial.push_back(random_chromosome(init_rng, cfg.init_min_depth, cfg.init_max_depth));
    const auto fitness = evaluate(initial, 0, std::size_t{0});
    Population pop;
    for (std::size_t i = 0; i < initial.size(); ++i) pop.push_back({initial[i], fitness[i], analyze(initial[i].tree)});
    result.history.push_back(generation_stats(0, pop));
    on_generation(result.history.back(), pop);

    const auto elites = static_cast<std::size_t>(cfg.elitism);
    for (int g = 1; g <= cfg.generations; ++g) {
        Rng rng = derive(master_seed, {{"gen", static_cast<std::uint64_t>(g)}, {"variation", 0}});
        pop = step_generation(pop, cfg, rng, [&](const std::vector<Chromosome>& offspring) { return evaluate(offspring, g, elites); });
        result.history.push_back(generation_stats(g, pop));
        on_generation(result.history.back(), pop);
    }
    result.final_population = std::move(pop);
    return result;
}

// Everything a fitness evaluation needs besides the chromosome.
struct Problem {
    const ExperimentData* data = nullptr;
    NetworkSpec network;
    TrainConfig training; // optimizer/batch settings; epochs and stopping are set per phase

    [[nodiscard]] TrainConfig search_config(const EvolutionConfig& cfg) const
    {
        TrainConfig t = training;
        t.max_epochs = cfg.search_epochs;
        t.patience = cfg.search_patience;
        t.checkpoint = false;
        return t;
    }

    [[nodiscard]] TrainConfig final_config(const EvolutionConfig& cfg) const
    {
        TrainConfig t = training;
        t.max_epochs = cfg.final_epochs;
        t.patience.reset();
        t.checkpoint = true;
        return t;
    }
};

// Search-phase fitness: early-stopped training on a freshly drawn random validation split.
// Every chromosome trains on its own addressed stream, so worker count never matters.
class SearchEvaluator {
public:
    SearchEvaluator(const Problem& problem, const EvolutionConfig& cfg, std::uint64_t master_seed, int workers)
        : problem_(problem), train_cfg_(problem.search_config(cfg)), master_(master_seed), workers_(workers)
    {
    }

    [[nodiscard]] std::vector<double> operator()(const std::vector<Chromosome>& chromosomes, int generation, std::size_t first_slot) const
    {
        std::vector<double> fitness(chromosomes.size(), kWorstFitness);
        parallel_for(chromosomes.size(), workers_, [&](std::size_t i) {
            Rng rng = derive(master_, {{"gen", static_cast<std::uint64_t>(generation)}, {"eval", first_slot + i}});
            Rng split_rng = rng.fork();
            Rng train_rng = rng.fork();
            const auto [train_set, validation] = problem_.data->search_split(split_rng);
            HiddenActivation act(chromosomes[i].tree);
            fitness[i] = train(problem_.network, act, chromosomes[i].init, train_set, validation, train_cfg_, train_rng).validation_fitness;
        });
        return fitness;
    }

private:
    const Problem& problem_;
    TrainConfig train_cfg_;
    std::uint64_t master_;
    int workers_;
};

enum class Baseline { relu, elu, selu };

[[nodiscard]] inline std::string_view name(Baseline b) noexcept
{
    switch (b) {
    case Baseline::relu: return "relu";
    case Baseline::elu: return "elu";
    case Baseline::selu: return "selu";
    }
    return "?";
}

[[nodiscard]] inline Baseline baseline_from_name(std::string_view s)
{
    for (Baseline b : {Baseline::relu, Baseline::elu, Baseline::selu}) {
        if (name(b) == s) return b;
    }
    throw std::invalid_argument("unknown baseline activation '" + std::string(s) + "' (expected relu, elu or selu)");
}

[[nodiscard]] inline InitScheme default_init(Baseline b) noexcept
{
    switch (b) {
    case Baseline::relu: return InitScheme::glorot_uniform;
    case Baseline::elu: return InitScheme::he_normal;
    case Baseline::selu: return InitScheme::lecun_normal;
    }
    return InitScheme::glorot_uniform;
}

[[nodiscard]] inline std::string baseline_label(Baseline b)
{
    switch (b) {
    case Baseline::relu: return "ReLU (baseline)";
    case Baseline::elu: return "ELU (baseline)";
    case Baseline::selu: return "SELU (baseline)";
    }
    return "?";
}

// Something the final phase can train: an evolved chromosome or a baseline.
struct Candidate {
    std::string label;
    std::variant<ActivationTree, HiddenActivation::Selu> activation;
    InitScheme init = InitScheme::glorot_uniform;
    bool baseline = false;

    [[nodiscard]] HiddenActivation make_activation() const
    {
        if (const auto* tree = std::get_if<ActivationTree>(&activation)) return HiddenActivation(*tree);
        return HiddenActivation::selu();
    }

    [[nodiscard]] static Candidate evolved(const Chromosome& c) { return {to_string(c.tree), c.tree, c.init, false}; }

    [[nodiscard]] static Candidate of(Baseline b, InitScheme init)
    {
        Candidate c;
        c.label = baseline_label(b);
        c.init = init;
        c.baseline = true;
        if (b == Baseline::selu) c.activation = HiddenActivation::Selu{};
        else c.activation = unary(b == Baseline::relu ? Primitive::relu : Primitive::elu, leaf());
        return c;
    }
};

struct FunctionReport {
    Candidate candidate;
    double validation_fitness = kWorstFitness; // final-phase ranking fitness (evolved only)
    std::vector<std::string> metric_names;
    std::vector<std::vector<double>> samples; // [metric][repeat]
    std::vector<double> validation_samples;   // validation fitness per repeat
    std::vector<EpochRecord> first_history;   // training trace of repeat 0
};

struct FinalReport {
    std::vector<Chromosome> distinct_top; // deduplicated top candidates by final-phase fitness
    std::vector<double> distinct_top_fitness;
    std::vector<FunctionReport> functions; // evolved best first, then the baselines
};

// Trains each candidate `repeats` times on the deterministic split and tests it.
[[nodiscard]] inline std::vector<FunctionReport> test_candidates(const std::vector<Candidate>& candidates, const Problem& problem,
                                                                 const EvolutionConfig& cfg, std::uint64_t master_seed, int workers)
{
    const TrainConfig final_cfg = problem.final_config(cfg);
    const auto repeats = static_cast<std::size_t>(cfg.repeats);
    std::vector<MetricSet> results(candidates.size() * repeats);
    std::vector<double> validation(results.size());
    std::vector<std::vector<EpochRecord>> histories(candidates.size());
    parallel_for(results.size(), workers, [&](std::size_t job) {
        const std::size_t c = job / repeats;
        const std::size_t r = job % repeats;
        const Candidate& cand = candidates[c];
        Rng rng = derive(master_seed, {{cand.baseline ? "baseline" : "evolved", 0}, {cand.label + "|" + std::string(name(cand.init)), 0}, {"repeat", r}});
        HiddenActivation act = cand.make_activation();
        TrainedModel model = train(problem.network, act, cand.init, problem.data->final_train(), problem.data->final_validation(), final_cfg, rng);
        results[job] = evaluate(model.model, problem.network, act, problem.data->test());
        validation[job] = model.validation_fitness;
        if (model.diverged) {
            for (auto& m : results[job]) m.value = std::nan("");
        }
        if (r == 0) histories[c] = std::move(model.history);
    });
    std::vector<FunctionReport> out;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        FunctionReport fr;
        fr.candidate = candidates[c];
        for (const auto& m : results[c * repeats]) fr.metric_names.push_back(m.name);
        fr.samples.assign(fr.metric_names.size(), {});
        for (std::size_t r = 0; r < repeats; ++r) {
            const auto& set = results[c * repeats + r];
            for (std::size_t k = 0; k < set.size(); ++k) fr.samples[k].push_back(set[k].value);
            fr.validation_samples.push_back(validation[c * repeats + r]);
        }
        fr.first_history = std::move(histories[c]);
        out.push_back(std::move(fr));
    }
    return out;
}

[[nodiscard]] inline std::vector<Candidate> default_baselines()
{
    return {Candidate::of(Baseline::relu, InitScheme::glorot_uniform), Candidate::of(Baseline::elu, InitScheme::he_normal),
            Candidate::of(Baseline::selu, InitScheme::lecun_normal)};
}

// Final phase: retrain every member for final_epochs with checkpointing on the
// deterministic split, keep the distinct members of the top `final_top`, and test the
// best `report_best` of them plus the three baselines `repeats` times each.
[[nodiscard]] inline FinalReport finalize(const Population& final_generation, const Problem& problem, const EvolutionConfig& cfg,
                                          std::uint64_t master_seed, int workers)
{
    const TrainConfig final_cfg = problem.final_config(cfg);
    Population retrained = final_generation;
    parallel_for(retrained.size(), workers, [&](std::size_t i) {
        Rng rng = derive(master_seed, {{"final", 0}, {"member", i}});
        HiddenActivation act(retrained[i].chromosome.tree);
        retrained[i].fitness = train(problem.network, act, retrained[i].chromosome.init, problem.data->final_train(),
                                     problem.data->final_validation(), final_cfg, rng)
                                   .validation_fitness;
    });

    FinalReport report;
    const auto order = descending_order(retrained);
    const std::size_t top = std::min(order.size(), static_cast<std::size_t>(cfg.final_top));
    for (std::size_t k = 0; k < top; ++k) {
        const auto& ind = retrained[order[k]];
        if (std::find(report.distinct_top.begin(), report.distinct_top.end(), ind.chromosome) != report.distinct_top.end()) continue;
        report.distinct_top.push_back(ind.chromosome);
        report.distinct_top_fitness.push_back(ind.fitness);
    }

    std::vector<Candidate> candidates;
    const std::size_t best = std::min(report.distinct_top.size(), static_cast<std::size_t>(cfg.report_best));
    for (std::size_t k = 0; k < best; ++k) candidates.push_back(Candidate::evolved(report.distinct_top[k]));
    for (auto& b : default_baselines()) candidates.push_back(std::move(b));
    report.functions = test_candidates(candidates, problem, cfg, master_seed, workers);
    for (std::size_t k = 0; k < best; ++k) report.functions[k].validation_fitness = report.distinct_top_fitness[k];
    return report;
}

} // namespace evoact
