#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "bodybrain/learner.hpp"
#include "bodybrain/locomotion.hpp"
#include "bodybrain/lsystem.hpp"
#include "bodybrain/morphology.hpp"

namespace bodybrain::evolution {

enum class Mode { EvolutionOnly, EvolutionPlusLearning };

std::string_view to_string(Mode mode);  // "evo" / "evo+learn"
std::optional<Mode> parse_mode(std::string_view text);

/// Which parents compete with the offspring for survival.
enum class SurvivorPool {
    AllParents,  // mu + lambda over every parent and offspring
    TopParents,  // only the best (population - offspring) parents join the offspring
};

struct EvoConfig {
    std::size_t population = 50;
    std::size_t offspring = 25;
    std::size_t generations = 30;
    double mutation_p = 0.8;
    double crossover_p = 0.8;
    std::size_t tournament = 2;
    Mode mode = Mode::EvolutionOnly;
    SurvivorPool survivor_pool = SurvivorPool::AllParents;
    lsystem::MutationParams mutation;
    int rewrite_iterations = lsystem::kDefaultIterations;
    std::size_t max_symbols = lsystem::kDefaultMaxSymbols;
    std::size_t max_modules = morphology::kMaxModules;

    void validate() const;
};

struct Settings {
    EvoConfig evo;
    learner::LearnerConfig learner;
    locomotion::SimConfig sim;
};

struct Lineage {
    std::optional<std::uint64_t> parent_a;
    std::optional<std::uint64_t> parent_b;
    std::size_t born = 0;
};

struct Individual {
    std::uint64_t id = 0;
    lsystem::Genotype genotype;
    morphology::BodyPlan body;
    bool degenerate = false;
    std::vector<double> weights;
    double fitness = 0.0;
    std::optional<double> pre_learning_fitness;
    morphology::DescriptorVector descriptors;
    Lineage lineage;
    std::vector<learner::GenerationLog> learning_log;
};

class MissingBaseline : public std::logic_error {
    using std::logic_error::logic_error;
};

/// Fitness after learning minus fitness of the inherited brain.
double learning_delta(const Individual& individual);

/// Brain read off the genotype: joint j takes the weight gene of the rule
/// occurrence that produced its hinge symbol. Missing genes read as zeros.
std::vector<double> inherited_weights(const lsystem::Genotype& genotype, std::span<const lsystem::TracedSymbol> word,
                                      const morphology::BodyPlan& body);

/// Develops a genotype into an unevaluated individual.
Individual express(lsystem::Genotype genotype, const EvoConfig& cfg);

/// Samples `size` individuals with replacement and returns the index of the
/// fittest; ties go to the earliest draw.
std::size_t tournament_select(std::span<const Individual> population, Rng& rng, std::size_t size = 2);
std::size_t binary_tournament(std::span<const Individual> population, Rng& rng);

Individual reproduce(const Individual& a, const Individual& b, const EvoConfig& cfg, Rng& rng);

/// Runs the simulator (and, with learning, the learner) on a fresh individual.
/// Returns the number of true evaluations spent.
std::uint64_t assess(Individual& individual, const Settings& settings, Rng& rng);

std::vector<Individual> select_survivors(std::vector<Individual> parents, std::vector<Individual> offspring,
                                         const EvoConfig& cfg);

struct EvolutionState {
    std::vector<Individual> population;
    std::vector<Individual> offspring;  // produced in the latest generation, after assessment
    std::size_t generation = 0;
    std::uint64_t true_evaluations = 0;
    std::uint64_t next_id = 0;
};

EvolutionState initialize(const Settings& settings, std::uint64_t seed);

EvolutionState run_generation(EvolutionState state, const Settings& settings, Rng& rng);

/// Closed-form true-evaluation count of one run.
std::uint64_t expected_evaluations(const Settings& settings);

} // namespace bodybrain::evolution
