#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "bodybrain/evolution.hpp"

namespace bodybrain::experiment {

inline constexpr std::string_view kGenerationsSchema = "bodybrain-generations v1";
inline constexpr std::string_view kLearningSchema = "bodybrain-learning v1";
inline constexpr std::string_view kRunsSchema = "bodybrain-runs v1";
inline constexpr std::string_view kSummarySchema = "bodybrain-summary v1";
inline constexpr std::string_view kFinalSchema = "bodybrain-final v1";

enum class Preset { Paper, Desk };

std::string_view to_string(Preset preset);
std::optional<Preset> parse_preset(std::string_view text);

/// File-name tag of a mode: "evo" or "evo_learn".
std::string mode_tag(evolution::Mode mode);

struct ExperimentSpec {
    evolution::Settings settings;
    std::size_t repetitions = 10;
    std::uint64_t master_seed = 1;
    std::filesystem::path output_dir = "results";
    Preset preset = Preset::Paper;
    std::size_t workers = 1;
    bool dump_trajectories = false;
    /// Called after every generation of every run, from the thread running it.
    std::function<void(std::size_t run, const evolution::EvolutionState&)> observer;

    static ExperimentSpec from_preset(Preset preset, evolution::Mode mode);
    void validate() const;
};

/// Overrides spec fields from a structured config document. Unknown keys are
/// rejected.
void apply_config(ExperimentSpec& spec, const nlohmann::json& config);
void apply_config_file(ExperimentSpec& spec, const std::filesystem::path& path);

inline constexpr std::array<std::string_view, 6> kDescriptorNames{
    "absolute_size", "width", "proportion", "n_bricks", "rel_limbs", "n_active_hinges",
};

struct GenerationRow {
    std::size_t run = 0;
    std::size_t generation = 0;
    evolution::Mode mode = evolution::Mode::EvolutionOnly;
    double mean_fitness = 0.0;
    double max_fitness = 0.0;
    double min_fitness = 0.0;
    std::optional<double> mean_delta;  // mean over this generation's offspring
    std::array<double, 6> descriptor_means{};
    std::uint64_t cumulative_evaluations = 0;
};

struct RunSummary {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    double final_mean_fitness = 0.0;
    double final_max_fitness = 0.0;
    std::uint64_t true_evaluations = 0;
    std::uint64_t expected_evaluations = 0;
    double wall_seconds = 0.0;
};

struct ExperimentLog {
    evolution::Mode mode = evolution::Mode::EvolutionOnly;
    std::vector<GenerationRow> rows;
    std::vector<RunSummary> runs;

    /// Mean over runs of the final-generation best fitness.
    double mean_best_fitness() const;
};

GenerationRow generation_row(const evolution::EvolutionState& state, std::size_t run, evolution::Mode mode);

/// Executes the repetitions with seeds master_seed + i and writes the CSVs
/// under spec.output_dir while running.
ExperimentLog run_experiment(const ExperimentSpec& spec);

/// Reads generations_<tag>.csv and runs_<tag>.csv back.
ExperimentLog read_log(const std::filesystem::path& dir, evolution::Mode mode);

// ---------------------------------------------------------------------------
// Statistics

struct Interval {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Percentile bootstrap interval of the mean.
Interval bootstrap_mean_ci(std::span<const double> values, std::size_t resamples = 1000, double level = 0.95,
                           std::uint64_t seed = 2021);

struct RankSumTest {
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    double statistic = 0.0;  // rank sum of the first sample
    double p_value = 1.0;    // two-sided
    bool exact = false;
};

/// Wilcoxon rank-sum test. Exact null distribution when there are no ties,
/// normal approximation with tie correction otherwise.
RankSumTest rank_sum_test(std::span<const double> a, std::span<const double> b);

struct SummaryRow {
    evolution::Mode mode = evolution::Mode::EvolutionOnly;
    std::size_t generation = 0;
    std::size_t runs = 0;
    Interval mean_fitness;
    Interval max_fitness;
    std::optional<Interval> mean_delta;
    std::array<double, 6> descriptor_means{};
    double cumulative_evaluations = 0.0;
};

struct FinalDistribution {
    evolution::Mode mode = evolution::Mode::EvolutionOnly;
    std::vector<double> mean_fitness;  // one value per run
    std::vector<double> max_fitness;
    double mean_best_fitness = 0.0;
    std::uint64_t true_evaluations = 0;  // summed over runs
    std::uint64_t expected_evaluations = 0;
};

struct Summary {
    std::vector<SummaryRow> rows;
    std::vector<FinalDistribution> finals;
    std::optional<RankSumTest> final_mean_test;  // first mode vs second when both present
    std::optional<RankSumTest> final_max_test;
};

Summary summarize(std::span<const ExperimentLog> logs, std::size_t resamples = 1000, std::uint64_t seed = 2021);

/// Writes summary.csv and final.csv.
void write_summary(const std::filesystem::path& dir, const Summary& summary);

} // namespace bodybrain::experiment
