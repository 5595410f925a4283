#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "bodybrain/experiment.hpp"

namespace bb = bodybrain;
namespace ex = bodybrain::experiment;

namespace {

struct RunOptions {
    std::string mode = "evo";
    std::string preset = "desk";
    std::uint64_t seed = 1;
    std::string out = "results";
    std::size_t reps = 0;
    std::size_t workers = 1;
    std::string config;
    bool trajectories = false;
};

std::vector<bb::evolution::Mode> modes_of(const std::string& text) {
    if (text == "both")
        return {bb::evolution::Mode::EvolutionOnly, bb::evolution::Mode::EvolutionPlusLearning};
    return {*bb::evolution::parse_mode(text)};
}

int cmd_run(const RunOptions& opt) {
    for (auto mode : modes_of(opt.mode)) {
        auto spec = ex::ExperimentSpec::from_preset(*ex::parse_preset(opt.preset), mode);
        if (!opt.config.empty())
            ex::apply_config_file(spec, opt.config);
        spec.settings.evo.mode = mode;
        spec.master_seed = opt.seed;
        spec.output_dir = opt.out;
        spec.workers = opt.workers;
        spec.dump_trajectories = opt.trajectories;
        if (opt.reps > 0)
            spec.repetitions = opt.reps;

        spdlog::info("{} preset, mode {}, {} repetitions, seeds {}..{}, {} true evaluations per run",
                     ex::to_string(spec.preset), bb::evolution::to_string(mode), spec.repetitions, spec.master_seed,
                     spec.master_seed + spec.repetitions - 1, bb::evolution::expected_evaluations(spec.settings));
        const auto log = ex::run_experiment(spec);
        fmt::print("{}: mean final best fitness {:.6g} cm/s over {} runs\n", bb::evolution::to_string(mode),
                   log.mean_best_fitness(), log.runs.size());
    }
    return 0;
}

void print_test(std::string_view label, const std::optional<ex::RankSumTest>& t) {
    if (!t)
        return;
    fmt::print("{}: W = {:.1f}, n = ({}, {}), p = {:.4g}{}\n", label, t->statistic, t->n1, t->n2, t->p_value,
               t->exact ? " (exact)" : "");
}

int cmd_summarize(const std::string& dir) {
    std::vector<ex::ExperimentLog> logs;
    for (auto mode : {bb::evolution::Mode::EvolutionOnly, bb::evolution::Mode::EvolutionPlusLearning}) {
        const auto path = std::filesystem::path(dir) / fmt::format("generations_{}.csv", ex::mode_tag(mode));
        if (std::filesystem::exists(path))
            logs.push_back(ex::read_log(dir, mode));
    }
    if (logs.empty()) {
        fmt::print(stderr, "no generations_*.csv found in {}\n", dir);
        return 1;
    }
    const auto summary = ex::summarize(logs);
    ex::write_summary(dir, summary);
    for (const auto& f : summary.finals) {
        const auto ci = ex::bootstrap_mean_ci(f.max_fitness);
        fmt::print("{}: final best fitness {:.6g} cm/s [{:.6g}, {:.6g}], {} runs, {} true evaluations\n",
                   bb::evolution::to_string(f.mode), ci.estimate, ci.lo, ci.hi, f.max_fitness.size(),
                   f.true_evaluations);
    }
    print_test("final mean fitness, evo vs evo+learn", summary.final_mean_test);
    print_test("final best fitness, evo vs evo+learn", summary.final_max_test);
    return 0;
}

int cmd_simulate(const std::string& genotype_file, const std::string& body_out, const std::string& trajectory_out) {
    std::ifstream in(genotype_file);
    if (!in)
        throw std::runtime_error(fmt::format("cannot open {}", genotype_file));
    std::stringstream text;
    text << in.rdbuf();

    const bb::evolution::Settings settings;
    auto ind = bb::evolution::express(bb::lsystem::from_text(text.str()), settings.evo);
    const auto trajectory = bb::locomotion::simulate(ind.body, ind.weights, settings.sim);
    fmt::print("modules {}, joints {}, fitness {:.6g} cm/s\n", ind.body.size(), ind.body.n_joints,
               bb::locomotion::evaluate(ind.body, ind.weights, settings.sim));
    if (!body_out.empty()) {
        std::ofstream out(body_out);
        bb::morphology::write_body(out, ind.body);
    }
    if (!trajectory_out.empty()) {
        std::ofstream out(trajectory_out);
        bb::locomotion::write_trajectory(out, trajectory, settings.sim.dt);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Evolution of modular robot bodies with and without brain learning"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Run repetitions of an experiment and write CSV logs");
    run_cmd->add_option("--mode", run.mode, "evo, evo+learn or both")
        ->check(CLI::IsMember({"evo", "evo+learn", "both"}));
    run_cmd->add_option("--preset", run.preset, "paper or desk")->check(CLI::IsMember({"paper", "desk"}));
    run_cmd->add_option("--seed", run.seed, "Master seed; run i uses seed + i");
    run_cmd->add_option("--out", run.out, "Output directory");
    run_cmd->add_option("--reps", run.reps, "Repetitions (default from the preset)");
    run_cmd->add_option("--workers", run.workers, "Concurrent runs")->check(CLI::PositiveNumber);
    run_cmd->add_option("--config", run.config, "JSON overrides")->check(CLI::ExistingFile);
    run_cmd->add_flag("--trajectories", run.trajectories, "Dump the best robot's trajectory per run");

    std::string summarize_dir;
    auto* sum_cmd = app.add_subcommand("summarize", "Aggregate logs into summary.csv and final.csv");
    sum_cmd->add_option("--in", summarize_dir, "Directory holding generations_*.csv")->required();

    std::string genotype_file, body_out, trajectory_out;
    auto* sim_cmd = app.add_subcommand("simulate", "Develop a genotype file and simulate it");
    sim_cmd->add_option("--genotype", genotype_file, "Genotype text file")->required()->check(CLI::ExistingFile);
    sim_cmd->add_option("--body", body_out, "Write the body plan here");
    sim_cmd->add_option("--trajectory", trajectory_out, "Write the trajectory here");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        if (*run_cmd)
            return cmd_run(run);
        if (*sum_cmd)
            return cmd_summarize(summarize_dir);
        return cmd_simulate(genotype_file, body_out, trajectory_out);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
}
