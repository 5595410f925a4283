#include "bodybrain/evolution.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace bodybrain::evolution {

std::string_view to_string(Mode mode) {
    return mode == Mode::EvolutionOnly ? "evo" : "evo+learn";
}

std::optional<Mode> parse_mode(std::string_view text) {
    if (text == "evo")
        return Mode::EvolutionOnly;
    if (text == "evo+learn")
        return Mode::EvolutionPlusLearning;
    return std::nullopt;
}

void EvoConfig::validate() const {
    if (population == 0 || offspring == 0 || generations == 0 || tournament == 0)
        throw std::invalid_argument("EvoConfig: sizes must be positive");
    if (tournament > population)
        throw std::invalid_argument("EvoConfig: tournament larger than the population");
    if (mutation_p < 0.0 || mutation_p > 1.0 || crossover_p < 0.0 || crossover_p > 1.0)
        throw std::invalid_argument("EvoConfig: probabilities must lie in [0, 1]");
    if (survivor_pool == SurvivorPool::TopParents && offspring > population)
        throw std::invalid_argument("EvoConfig: top-parents pool needs offspring <= population");
}

double learning_delta(const Individual& individual) {
    if (!individual.pre_learning_fitness)
        throw MissingBaseline(fmt::format("individual {} has no pre-learning fitness", individual.id));
    return individual.fitness - *individual.pre_learning_fitness;
}

std::vector<double> inherited_weights(const lsystem::Genotype& genotype, std::span<const lsystem::TracedSymbol> word,
                                      const morphology::BodyPlan& body) {
    const auto genes = genotype.weight_genes();
    std::vector<double> out(3 * static_cast<std::size_t>(body.n_joints), 0.0);
    for (int module : body.joint_modules()) {
        const auto& m = body.modules[static_cast<std::size_t>(module)];
        const auto j = static_cast<std::size_t>(*m.joint_index);
        if (m.source_index < 0 || static_cast<std::size_t>(m.source_index) >= word.size())
            continue;
        const int gene = word[static_cast<std::size_t>(m.source_index)].gene;
        if (gene < 0 || static_cast<std::size_t>(gene) >= genes.size())
            continue;
        std::copy(genes[static_cast<std::size_t>(gene)].begin(), genes[static_cast<std::size_t>(gene)].end(),
                  out.begin() + static_cast<std::ptrdiff_t>(3 * j));
    }
    return out;
}

Individual express(lsystem::Genotype genotype, const EvoConfig& cfg) {
    Individual ind;
    const auto word = lsystem::develop(genotype, cfg.rewrite_iterations, cfg.max_symbols);
    const auto symbols = lsystem::symbols_of(word);
    auto decoded = morphology::decode(symbols, cfg.max_modules);
    ind.body = std::move(decoded.body);
    ind.degenerate = decoded.degenerate;
    ind.weights = inherited_weights(genotype, word, ind.body);
    ind.descriptors = morphology::descriptors(ind.body);
    ind.genotype = std::move(genotype);
    return ind;
}

std::size_t tournament_select(std::span<const Individual> population, Rng& rng, std::size_t size) {
    if (population.empty())
        throw std::invalid_argument("tournament on an empty population");
    std::size_t winner = uniform_int<std::size_t>(rng, 0, population.size() - 1);
    for (std::size_t i = 1; i < size; ++i) {
        const auto challenger = uniform_int<std::size_t>(rng, 0, population.size() - 1);
        if (population[challenger].fitness > population[winner].fitness)
            winner = challenger;
    }
    return winner;
}

std::size_t binary_tournament(std::span<const Individual> population, Rng& rng) {
    return tournament_select(population, rng, 2);
}

Individual reproduce(const Individual& a, const Individual& b, const EvoConfig& cfg, Rng& rng) {
    lsystem::Genotype genotype = bernoulli(rng, cfg.crossover_p) ? lsystem::crossover(a.genotype, b.genotype, rng)
                                                                  : a.genotype;
    if (bernoulli(rng, cfg.mutation_p))
        genotype = lsystem::mutate(genotype, rng, cfg.mutation);
    Individual child = express(std::move(genotype), cfg);
    child.lineage.parent_a = a.id;
    child.lineage.parent_b = b.id;
    return child;
}

std::uint64_t assess(Individual& ind, const Settings& settings, Rng& rng) {
    std::uint64_t evaluations = 0;
    const auto& body = ind.body;
    auto evaluate = [&](std::span<const double> w) {
        ++evaluations;
        return locomotion::evaluate(body, w, settings.sim);
    };

    if (settings.evo.mode == Mode::EvolutionOnly) {
        ind.fitness = evaluate(ind.weights);
        ind.pre_learning_fitness.reset();
        return evaluations;
    }

    const double inherited = evaluate(ind.weights);
    ind.pre_learning_fitness = inherited;
    ind.fitness = inherited;
    if (ind.degenerate)
        return evaluations;

    auto learned = learner::learn(ind.weights, settings.learner, evaluate, rng);
    ind.weights = std::move(learned.best_weights);
    ind.fitness = learned.best_fitness;
    ind.learning_log = std::move(learned.log);
    return evaluations;
}

std::vector<Individual> select_survivors(std::vector<Individual> parents, std::vector<Individual> offspring,
                                         const EvoConfig& cfg) {
    // fitter first; among equals the younger (later born, then later id) wins
    auto better = [](const Individual& a, const Individual& b) {
        if (a.fitness != b.fitness)
            return a.fitness > b.fitness;
        if (a.lineage.born != b.lineage.born)
            return a.lineage.born > b.lineage.born;
        return a.id > b.id;
    };
    std::vector<Individual> pool;
    pool.reserve(parents.size() + offspring.size());
    if (cfg.survivor_pool == SurvivorPool::TopParents) {
        std::sort(parents.begin(), parents.end(), better);
        parents.resize(std::min(parents.size(), cfg.population - std::min(cfg.population, offspring.size())));
    }
    std::move(parents.begin(), parents.end(), std::back_inserter(pool));
    std::move(offspring.begin(), offspring.end(), std::back_inserter(pool));
    std::sort(pool.begin(), pool.end(), better);
    if (pool.size() > cfg.population)
        pool.resize(cfg.population);
    return pool;
}

EvolutionState initialize(const Settings& settings, std::uint64_t seed) {
    settings.evo.validate();
    settings.learner.validate();
    settings.sim.validate();

    EvolutionState state;
    state.population.reserve(settings.evo.population);
    for (std::size_t i = 0; i < settings.evo.population; ++i) {
        Rng genotype_rng = make_rng(seed, {0, i, 0});
        Individual ind = express(lsystem::random_genotype(genotype_rng), settings.evo);
        ind.id = state.next_id++;
        ind.lineage.born = 0;
        Rng learn_rng = make_rng(seed, {0, i, 1});
        state.true_evaluations += assess(ind, settings, learn_rng);
        state.population.push_back(std::move(ind));
    }
    return state;
}

EvolutionState run_generation(EvolutionState state, const Settings& settings, Rng& rng) {
    const auto& cfg = settings.evo;
    if (state.population.size() != cfg.population)
        throw std::invalid_argument(
            fmt::format("run_generation: population holds {} individuals, expected {}", state.population.size(),
                        cfg.population));
    ++state.generation;
    const std::uint64_t generation_seed = rng();

    // parents are chosen up front so offspring streams are independent of each other
    std::vector<std::pair<std::size_t, std::size_t>> parents(cfg.offspring);
    for (auto& [a, b] : parents) {
        a = tournament_select(state.population, rng, cfg.tournament);
        b = tournament_select(state.population, rng, cfg.tournament);
    }

    std::vector<Individual> offspring;
    offspring.reserve(cfg.offspring);
    for (std::size_t i = 0; i < cfg.offspring; ++i) {
        Rng child_rng = make_rng(generation_seed, {i});
        Individual child = reproduce(state.population[parents[i].first], state.population[parents[i].second], cfg,
                                     child_rng);
        child.id = state.next_id++;
        child.lineage.born = state.generation;
        state.true_evaluations += assess(child, settings, child_rng);
        offspring.push_back(std::move(child));
    }

    state.offspring = offspring;
    state.population = select_survivors(std::move(state.population), std::move(offspring), cfg);
    return state;
}

std::uint64_t expected_evaluations(const Settings& settings) {
    const auto& e = settings.evo;
    const std::uint64_t robots = e.population + e.offspring * e.generations;
    if (e.mode == Mode::EvolutionOnly)
        return robots;
    return robots * (1 + settings.learner.evaluation_budget());
}

} // namespace bodybrain::evolution
