#include <doctest.h>

#include <algorithm>

#include "bodybrain/evolution.hpp"

using namespace bodybrain;
using namespace bodybrain::evolution;
using lsystem::RobotSymbol;

namespace {

Individual with_fitness(double f, std::uint64_t id = 0, std::size_t born = 0) {
    Individual ind;
    ind.fitness = f;
    ind.id = id;
    ind.lineage.born = born;
    return ind;
}

Settings small(Mode mode) {
    Settings s;
    s.evo.population = 6;
    s.evo.offspring = 4;
    s.evo.generations = 3;
    s.evo.mode = mode;
    s.learner.population = 4;
    s.learner.generations = 3;
    s.sim.eval_time = 2.0;
    return s;
}

} // namespace

TEST_CASE("binary tournament win rate") {
    std::vector<Individual> pop{with_fitness(5.0), with_fitness(1.0)};
    Rng rng{17};
    int wins = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
        wins += binary_tournament(pop, rng) == 0;
    CHECK(static_cast<double>(wins) / n == doctest::Approx(0.75).epsilon(0.02 / 0.75));

    std::vector<Individual> one{with_fitness(2.0)};
    CHECK(binary_tournament(one, rng) == 0);
    CHECK_THROWS_AS(binary_tournament(std::vector<Individual>{}, rng), std::invalid_argument);
}

TEST_CASE("tournament ties go to the first draw") {
    std::vector<Individual> pop{with_fitness(1.0), with_fitness(1.0), with_fitness(1.0)};
    Rng a{5}, b{5};
    for (int i = 0; i < 50; ++i) {
        const auto first = uniform_int<std::size_t>(b, 0, 2);
        uniform_int<std::size_t>(b, 0, 2);
        CHECK(binary_tournament(pop, a) == first);
    }
}

TEST_CASE("learning delta") {
    Individual ind = with_fitness(3.0);
    CHECK_THROWS_AS(learning_delta(ind), MissingBaseline);
    ind.pre_learning_fitness = 3.0;
    CHECK(learning_delta(ind) == 0.0);
    ind.fitness = 3.5;
    CHECK(learning_delta(ind) == 0.5);
}

TEST_CASE("inherited weights follow the producing gene") {
    lsystem::Genotype g;
    g.rules[0] = {{RobotSymbol::Core, {0.1, 0.1, 0.1}}, {RobotSymbol::Hinge, {0.2, 0.3, 0.4}},
                  {RobotSymbol::MountLeft, {}}, {RobotSymbol::Hinge, {-0.5, -0.6, -0.7}}};
    g.rules[1] = {{RobotSymbol::Brick, {0, 0, 0}}};
    g.rules[2] = {{RobotSymbol::Brick, {0.9, 0.9, 0.9}}};
    EvoConfig cfg;
    cfg.rewrite_iterations = 1;
    const auto ind = express(g, cfg);
    REQUIRE(ind.body.n_joints == 2);
    CHECK(ind.weights == std::vector<double>{0.2, 0.3, 0.4, -0.5, -0.6, -0.7});

    // without the producing gene the joint reads zeros
    std::vector<lsystem::TracedSymbol> word{{RobotSymbol::Core, -1}, {RobotSymbol::Hinge, -1}};
    const auto body = morphology::decode(lsystem::symbols_of(word)).body;
    CHECK(inherited_weights(g, word, body) == std::vector<double>{0, 0, 0});
}

TEST_CASE("weight vectors always match the joints") {
    Rng rng{3};
    EvoConfig cfg;
    for (int i = 0; i < 300; ++i) {
        const auto ind = express(lsystem::random_genotype(rng), cfg);
        CHECK(ind.weights.size() == 3 * static_cast<std::size_t>(ind.body.n_joints));
        CHECK(ind.descriptors.absolute_size == static_cast<int>(ind.body.size()));
    }
}

TEST_CASE("cloning path copies parent a") {
    Rng rng{2};
    EvoConfig cfg;
    cfg.crossover_p = 0.0;
    cfg.mutation_p = 0.0;
    const auto a = express(lsystem::random_genotype(rng), cfg);
    const auto b = express(lsystem::random_genotype(rng), cfg);
    const auto child = reproduce(a, b, cfg, rng);
    CHECK(child.genotype == a.genotype);
    CHECK(child.weights == a.weights);

    cfg.crossover_p = 0.8;
    cfg.mutation_p = 0.8;
    Rng r1{9}, r2{9};
    CHECK(reproduce(a, b, cfg, r1).genotype == reproduce(a, b, cfg, r2).genotype);
}

TEST_CASE("survivor selection") {
    EvoConfig cfg;
    cfg.population = 3;
    cfg.offspring = 2;
    std::vector<Individual> parents{with_fitness(1.0, 0, 0), with_fitness(4.0, 1, 0), with_fitness(2.0, 2, 0)};
    std::vector<Individual> offspring{with_fitness(2.0, 3, 1), with_fitness(0.5, 4, 1)};
    auto s = select_survivors(parents, offspring, cfg);
    REQUIRE(s.size() == 3);
    CHECK(s[0].id == 1);
    CHECK(s[1].id == 3);  // ties favour the younger
    CHECK(s[2].id == 2);

    cfg.survivor_pool = SurvivorPool::TopParents;
    s = select_survivors(parents, offspring, cfg);
    REQUIRE(s.size() == 3);
    CHECK(s[0].id == 1);
    CHECK(s[1].id == 3);
    CHECK(s[2].id == 4);  // only the best parent competes
}

TEST_CASE("evolution-only generations spend one evaluation per offspring") {
    const auto settings = small(Mode::EvolutionOnly);
    auto state = initialize(settings, 11);
    CHECK(state.true_evaluations == 6);
    Rng rng{1};
    double best = -1.0;
    for (std::size_t g = 0; g < settings.evo.generations; ++g) {
        const auto before = state.true_evaluations;
        state = run_generation(std::move(state), settings, rng);
        CHECK(state.true_evaluations - before == 4);
        CHECK(state.population.size() == 6);
        CHECK(state.population.front().fitness >= best);
        best = state.population.front().fitness;
        for (const auto& ind : state.population)
            CHECK_FALSE(ind.pre_learning_fitness.has_value());
    }
    CHECK(state.true_evaluations == expected_evaluations(settings));
}

TEST_CASE("learning generations and deltas") {
    const auto settings = small(Mode::EvolutionPlusLearning);
    const std::uint64_t per_robot = 1 + settings.learner.evaluation_budget();
    auto state = initialize(settings, 5);
    Rng rng{2};
    for (std::size_t g = 0; g < settings.evo.generations; ++g) {
        const auto before = state.true_evaluations;
        state = run_generation(std::move(state), settings, rng);
        std::uint64_t spent = 0;
        double delta_sum = 0.0;
        for (const auto& child : state.offspring) {
            REQUIRE(child.pre_learning_fitness.has_value());
            CHECK(learning_delta(child) >= 0.0);
            delta_sum += learning_delta(child);
            spent += child.degenerate ? 1 : per_robot;
        }
        CHECK(state.true_evaluations - before == spent);
        CHECK(delta_sum >= 0.0);
    }
}

TEST_CASE("runs are reproducible") {
    const auto settings = small(Mode::EvolutionPlusLearning);
    auto run = [&] {
        auto state = initialize(settings, 21);
        Rng rng = make_rng(21, {1});
        for (std::size_t g = 0; g < settings.evo.generations; ++g)
            state = run_generation(std::move(state), settings, rng);
        return state;
    };
    const auto a = run(), b = run();
    REQUIRE(a.population.size() == b.population.size());
    for (std::size_t i = 0; i < a.population.size(); ++i) {
        CHECK(a.population[i].genotype == b.population[i].genotype);
        CHECK(a.population[i].fitness == b.population[i].fitness);
        CHECK(a.population[i].weights == b.population[i].weights);
    }
}

TEST_CASE("budget formulas") {
    Settings s;
    CHECK(expected_evaluations(s) == 800);
    s.evo.mode = Mode::EvolutionPlusLearning;
    CHECK(expected_evaluations(s) == 800 * 251);
    CHECK(parse_mode("evo+learn") == Mode::EvolutionPlusLearning);
    CHECK(to_string(Mode::EvolutionOnly) == "evo");
    CHECK_FALSE(parse_mode("learn").has_value());
}

TEST_CASE("configuration checks") {
    EvoConfig c;
    c.tournament = 51;
    CHECK_THROWS(c.validate());
    c = {};
    c.mutation_p = -0.1;
    CHECK_THROWS(c.validate());
    Settings s = small(Mode::EvolutionOnly);
    auto state = initialize(s, 1);
    state.population.pop_back();
    Rng rng{1};
    CHECK_THROWS_AS(run_generation(std::move(state), s, rng), std::invalid_argument);
}
