#include "bodybrain/learner.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

namespace bodybrain::learner {

void LearnerConfig::validate() const {
    if (!(scaling > 0.0))
        throw std::invalid_argument("LearnerConfig: F must be positive");
    if (crossover_p < 0.0 || crossover_p > 1.0)
        throw std::invalid_argument("LearnerConfig: p must lie in [0, 1]");
    if (neighbors < 1)
        throw std::invalid_argument("LearnerConfig: k must be at least 1");
    if (population < 4)
        throw std::invalid_argument("LearnerConfig: population must be at least 4");
    if (generations < 1)
        throw std::invalid_argument("LearnerConfig: at least one generation required");
    if (!(lower < upper))
        throw std::invalid_argument("LearnerConfig: empty bounds");
}

bool Archive::add(EvaluationRecord record) {
    if (!record.is_true)
        return false;
    for (const auto& r : records_)
        if (r.weights == record.weights)
            return false;
    records_.push_back(std::move(record));
    return true;
}

const EvaluationRecord& Archive::best() const {
    if (records_.empty())
        throw std::logic_error("Archive::best on an empty archive");
    auto it = std::max_element(records_.begin(), records_.end(),
                               [](const auto& a, const auto& b) { return a.fitness < b.fitness; });
    return *it;
}

namespace {

void require_same_size(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument(fmt::format("vector dimensions differ: {} vs {}", a.size(), b.size()));
}

} // namespace

Vector de_mutation(std::span<const double> xi, std::span<const double> xj, std::span<const double> xk, double F) {
    require_same_size(xi, xj);
    require_same_size(xi, xk);
    Vector y(xi.size());
    for (std::size_t d = 0; d < y.size(); ++d)
        y[d] = xi[d] + F * (xj[d] - xk[d]);
    return y;
}

Vector uniform_crossover(std::span<const double> y, std::span<const double> xi, double p, Rng& rng) {
    require_same_size(y, xi);
    Vector v(y.size());
    for (std::size_t d = 0; d < v.size(); ++d)
        v[d] = bernoulli(rng, p) ? y[d] : xi[d];
    return v;
}

std::array<Vector, 3> revde_triple(std::span<const double> x1, std::span<const double> x2,
                                   std::span<const double> x3, double F) {
    Vector y1 = de_mutation(x1, x2, x3, F);
    Vector y2 = de_mutation(x2, x3, y1, F);
    Vector y3 = de_mutation(x3, y1, y2, F);
    return {std::move(y1), std::move(y2), std::move(y3)};
}

Eigen::Matrix3d revde_matrix(double F) {
    const double F2 = F * F, F3 = F2 * F;
    Eigen::Matrix3d r;
    r << 1.0, F, -F,
        -F, 1.0 - F2, F + F2,
        F + F2, F3 + F2 - F, 1.0 - 2.0 * F2 - F3;
    return r;
}

double knn_predict(const Archive& archive, std::span<const double> query, std::size_t k) {
    if (k == 0)
        throw std::invalid_argument("knn_predict: k must be at least 1");
    if (archive.size() < k)
        throw ArchiveTooSmall(fmt::format("knn_predict: archive holds {} records, k = {}", archive.size(), k));

    const auto& records = archive.records();
    std::vector<std::pair<double, std::size_t>> ranked(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        require_same_size(records[i].weights, query);
        double d2 = 0.0;
        for (std::size_t d = 0; d < query.size(); ++d) {
            const double diff = records[i].weights[d] - query[d];
            d2 += diff * diff;
        }
        ranked[i] = {d2, i};
    }
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        sum += records[ranked[i].second].fitness;
    return sum / static_cast<double>(k);
}

namespace {

struct Scored {
    Vector weights;
    double fitness;
};

void clip(Vector& v, double lo, double hi) {
    for (double& x : v)
        x = std::clamp(x, lo, hi);
}

GenerationLog summarize(std::size_t generation, const std::vector<Scored>& population, const Archive& archive,
                        std::size_t evaluations) {
    GenerationLog log;
    log.generation = generation;
    log.best_fitness = archive.best().fitness;
    double sum = 0.0;
    for (const auto& s : population)
        sum += s.fitness;
    log.mean_fitness = sum / static_cast<double>(population.size());
    log.archive_size = archive.size();
    log.true_evaluations = evaluations;
    return log;
}

void sort_by_fitness(std::vector<Scored>& v) {
    std::stable_sort(v.begin(), v.end(), [](const Scored& a, const Scored& b) { return a.fitness > b.fitness; });
}

} // namespace

LearnResult learn(std::span<const double> initial_weights, const LearnerConfig& cfg, const Evaluator& evaluate,
                  Rng& rng) {
    cfg.validate();
    const std::size_t X = cfg.population;
    const std::size_t budget = cfg.evaluation_budget();

    LearnResult result;
    auto true_evaluate = [&](const Vector& w) {
        const double f = evaluate(w);
        ++result.budget.truly_evaluated;
        result.archive.add({w, f, true});
        return f;
    };

    // (1) inherited brain plus Gaussian perturbations
    std::vector<Scored> population;
    population.reserve(2 * X);
    population.push_back({Vector(initial_weights.begin(), initial_weights.end()), 0.0});
    while (population.size() < X) {
        Vector w(initial_weights.begin(), initial_weights.end());
        for (double& x : w)
            x += normal(rng, 0.0, cfg.init_sigma);
        clip(w, cfg.lower, cfg.upper);
        population.push_back({std::move(w), 0.0});
    }

    // (2) evaluate and seed the archive
    for (auto& s : population)
        s.fitness = true_evaluate(s.weights);
    sort_by_fitness(population);
    result.log.push_back(summarize(0, population, result.archive, result.budget.truly_evaluated));

    std::vector<std::size_t> second(X), third(X);
    for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
        // (3) triplets from two shuffles of the current top-X set
        std::iota(second.begin(), second.end(), std::size_t{0});
        std::iota(third.begin(), third.end(), std::size_t{0});
        std::shuffle(second.begin(), second.end(), rng);
        std::shuffle(third.begin(), third.end(), rng);

        std::vector<Vector> candidates;
        candidates.reserve(3 * X);
        for (std::size_t n = 0; n < X; ++n) {
            const Vector& x1 = population[n].weights;
            const Vector& x2 = population[second[n]].weights;
            const Vector& x3 = population[third[n]].weights;
            auto ys = revde_triple(x1, x2, x3, cfg.scaling);
            const std::array<const Vector*, 3> bases{&x1, &x2, &x3};
            for (std::size_t m = 0; m < 3; ++m) {
                Vector v = uniform_crossover(ys[m], *bases[m], cfg.crossover_p, rng);
                clip(v, cfg.lower, cfg.upper);
                candidates.push_back(std::move(v));
            }
        }
        result.budget.generated += candidates.size();

        const std::size_t remaining = budget - std::min(budget, result.budget.truly_evaluated);
        const std::size_t take = std::min(X, remaining);
        if (take > 0) {
            // (4) surrogate screening; a zero-dimensional brain collapses the
            // archive to one record, so k never exceeds the archive size here
            const std::size_t k = std::min(cfg.neighbors, result.archive.size());
            std::vector<std::pair<double, std::size_t>> predicted(candidates.size());
            for (std::size_t c = 0; c < candidates.size(); ++c)
                predicted[c] = {knn_predict(result.archive, candidates[c], k), c};
            std::stable_sort(predicted.begin(), predicted.end(),
                             [](const auto& a, const auto& b) { return a.first > b.first; });

            // (5) truly evaluate the most promising X
            for (std::size_t i = 0; i < take; ++i) {
                Vector& w = candidates[predicted[i].second];
                const double f = true_evaluate(w);
                population.push_back({std::move(w), f});
            }
            // (6) (mu + lambda) survivors
            sort_by_fitness(population);
            population.resize(X);
        }
        result.log.push_back(summarize(gen, population, result.archive, result.budget.truly_evaluated));
    }

    const auto& best = result.archive.best();
    result.best_weights = best.weights;
    result.best_fitness = best.fitness;
    return result;
}

} // namespace bodybrain::learner
