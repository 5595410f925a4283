#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "bodybrain/rng.hpp"

namespace bodybrain::learner {

using Vector = std::vector<double>;

struct LearnerConfig {
    std::size_t population = 25;  // X, also the number of candidates truly evaluated per generation
    double scaling = 0.5;         // F
    double crossover_p = 0.9;     // p
    std::size_t neighbors = 3;    // k
    std::size_t generations = 10; // g
    double lower = -1.0;
    double upper = 1.0;
    double init_sigma = 0.2;  // spread of the initial population around the inherited brain

    /// True evaluations one learning run performs: X initial + X per generation
    /// for all but the last generation.
    std::size_t evaluation_budget() const { return population * generations; }
    std::size_t generated_candidates() const { return 3 * population * generations; }

    void validate() const;
};

struct EvaluationRecord {
    Vector weights;
    double fitness = 0.0;
    bool is_true = true;
};

class ArchiveTooSmall : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Append-only store of truly evaluated brains backing the K-NN surrogate.
class Archive {
public:
    /// Returns false (and stores nothing) for surrogate records or weight
    /// vectors already present.
    bool add(EvaluationRecord record);

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const std::vector<EvaluationRecord>& records() const { return records_; }
    const EvaluationRecord& best() const;

private:
    std::vector<EvaluationRecord> records_;
};

Vector de_mutation(std::span<const double> xi, std::span<const double> xj, std::span<const double> xk, double F);

Vector uniform_crossover(std::span<const double> y, std::span<const double> xi, double p, Rng& rng);

std::array<Vector, 3> revde_triple(std::span<const double> x1, std::span<const double> x2,
                                   std::span<const double> x3, double F);

/// Linear map taking (x1, x2, x3) to (y1, y2, y3) per coordinate.
Eigen::Matrix3d revde_matrix(double F);

/// Mean fitness of the k nearest archived brains (Euclidean); equidistant
/// records are taken in insertion order.
double knn_predict(const Archive& archive, std::span<const double> query, std::size_t k);

struct BudgetReport {
    std::size_t generated = 0;
    std::size_t truly_evaluated = 0;
};

struct GenerationLog {
    std::size_t generation = 0;
    double best_fitness = 0.0;
    double mean_fitness = 0.0;
    std::size_t archive_size = 0;
    std::size_t true_evaluations = 0;
};

struct LearnResult {
    Vector best_weights;
    double best_fitness = 0.0;
    BudgetReport budget;
    std::vector<GenerationLog> log;
    Archive archive;
};

using Evaluator = std::function<double(std::span<const double>)>;

/// RevDE with K-NN surrogate screening, starting from an inherited brain.
LearnResult learn(std::span<const double> initial_weights, const LearnerConfig& cfg, const Evaluator& evaluate,
                  Rng& rng);

} // namespace bodybrain::learner
