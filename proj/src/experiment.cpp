#include "bodybrain/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace bodybrain::experiment {

using evolution::Mode;
namespace fs = std::filesystem;

std::string_view to_string(Preset preset) {
    return preset == Preset::Paper ? "paper" : "desk";
}

std::optional<Preset> parse_preset(std::string_view text) {
    if (text == "paper")
        return Preset::Paper;
    if (text == "desk")
        return Preset::Desk;
    return std::nullopt;
}

std::string mode_tag(Mode mode) {
    return mode == Mode::EvolutionOnly ? "evo" : "evo_learn";
}

ExperimentSpec ExperimentSpec::from_preset(Preset preset, Mode mode) {
    ExperimentSpec spec;
    spec.preset = preset;
    spec.settings.evo.mode = mode;
    if (preset == Preset::Desk) {
        spec.settings.evo.population = 10;
        spec.settings.evo.offspring = 10;
        spec.settings.evo.generations = 10;
        spec.settings.learner.population = 5;
        spec.settings.learner.generations = 10;
        spec.repetitions = 3;
    }
    return spec;
}

void ExperimentSpec::validate() const {
    settings.evo.validate();
    settings.learner.validate();
    settings.sim.validate();
    if (repetitions == 0)
        throw std::invalid_argument("ExperimentSpec: repetitions must be positive");
    if (workers == 0)
        throw std::invalid_argument("ExperimentSpec: workers must be positive");
}

namespace {

template <typename T>
void read_key(const nlohmann::json& obj, std::string_view key, T& target) {
    if (auto it = obj.find(std::string(key)); it != obj.end())
        target = it->get<T>();
}

void check_keys(const nlohmann::json& obj, std::string_view section, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object())
        throw std::invalid_argument(fmt::format("config section '{}' must be an object", section));
    for (const auto& [key, _] : obj.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw std::invalid_argument(fmt::format("unknown config key '{}.{}'", section, key));
}

} // namespace

void apply_config(ExperimentSpec& spec, const nlohmann::json& config) {
    check_keys(config, "", {"preset", "mode", "seed", "repetitions", "workers", "output", "evolution", "learner", "sim"});
    if (auto it = config.find("preset"); it != config.end()) {
        const auto preset = parse_preset(it->get<std::string>());
        if (!preset)
            throw std::invalid_argument("config: preset must be 'paper' or 'desk'");
        const Mode mode = spec.settings.evo.mode;
        spec = ExperimentSpec::from_preset(*preset, mode);
    }
    if (auto it = config.find("mode"); it != config.end()) {
        const auto mode = evolution::parse_mode(it->get<std::string>());
        if (!mode)
            throw std::invalid_argument("config: mode must be 'evo' or 'evo+learn'");
        spec.settings.evo.mode = *mode;
    }
    read_key(config, "seed", spec.master_seed);
    read_key(config, "repetitions", spec.repetitions);
    read_key(config, "workers", spec.workers);
    if (auto it = config.find("output"); it != config.end())
        spec.output_dir = it->get<std::string>();

    if (auto it = config.find("evolution"); it != config.end()) {
        const auto& e = *it;
        check_keys(e, "evolution",
                   {"population", "offspring", "generations", "mutation_p", "crossover_p", "tournament",
                    "survivor_pool", "rule_mutation_p", "weight_sigma", "rewrite_iterations", "max_symbols",
                    "max_modules"});
        auto& evo = spec.settings.evo;
        read_key(e, "population", evo.population);
        read_key(e, "offspring", evo.offspring);
        read_key(e, "generations", evo.generations);
        read_key(e, "mutation_p", evo.mutation_p);
        read_key(e, "crossover_p", evo.crossover_p);
        read_key(e, "tournament", evo.tournament);
        read_key(e, "rule_mutation_p", evo.mutation.rule_probability);
        read_key(e, "weight_sigma", evo.mutation.weight_sigma);
        read_key(e, "rewrite_iterations", evo.rewrite_iterations);
        read_key(e, "max_symbols", evo.max_symbols);
        read_key(e, "max_modules", evo.max_modules);
        if (auto pool = e.find("survivor_pool"); pool != e.end()) {
            const auto name = pool->get<std::string>();
            if (name == "all_parents")
                evo.survivor_pool = evolution::SurvivorPool::AllParents;
            else if (name == "top_parents")
                evo.survivor_pool = evolution::SurvivorPool::TopParents;
            else
                throw std::invalid_argument("config: survivor_pool must be 'all_parents' or 'top_parents'");
        }
    }
    if (auto it = config.find("learner"); it != config.end()) {
        const auto& l = *it;
        check_keys(l, "learner", {"population", "F", "p", "k", "generations", "init_sigma"});
        auto& lc = spec.settings.learner;
        read_key(l, "population", lc.population);
        read_key(l, "F", lc.scaling);
        read_key(l, "p", lc.crossover_p);
        read_key(l, "k", lc.neighbors);
        read_key(l, "generations", lc.generations);
        read_key(l, "init_sigma", lc.init_sigma);
    }
    if (auto it = config.find("sim"); it != config.end()) {
        const auto& s = *it;
        check_keys(s, "sim", {"eval_time", "dt", "module_edge", "joint_amplitude", "lateral_drag"});
        auto& sc = spec.settings.sim;
        read_key(s, "eval_time", sc.eval_time);
        read_key(s, "dt", sc.dt);
        read_key(s, "module_edge", sc.module_edge);
        read_key(s, "joint_amplitude", sc.joint_amplitude);
        read_key(s, "lateral_drag", sc.lateral_drag);
    }
}

void apply_config_file(ExperimentSpec& spec, const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error(fmt::format("cannot open config file {}", path.string()));
    apply_config(spec, nlohmann::json::parse(in));
}

double ExperimentLog::mean_best_fitness() const {
    if (runs.empty())
        return 0.0;
    double sum = 0.0;
    for (const auto& r : runs)
        sum += r.final_max_fitness;
    return sum / static_cast<double>(runs.size());
}

GenerationRow generation_row(const evolution::EvolutionState& state, std::size_t run, Mode mode) {
    GenerationRow row;
    row.run = run;
    row.generation = state.generation;
    row.mode = mode;
    row.cumulative_evaluations = state.true_evaluations;

    const auto& pop = state.population;
    const double n = static_cast<double>(pop.size());
    row.max_fitness = pop.front().fitness;
    row.min_fitness = pop.front().fitness;
    double sum = 0.0;
    for (const auto& ind : pop) {
        sum += ind.fitness;
        row.max_fitness = std::max(row.max_fitness, ind.fitness);
        row.min_fitness = std::min(row.min_fitness, ind.fitness);
        const auto& d = ind.descriptors;
        row.descriptor_means[0] += d.absolute_size;
        row.descriptor_means[1] += d.width;
        row.descriptor_means[2] += d.proportion;
        row.descriptor_means[3] += d.n_bricks;
        row.descriptor_means[4] += d.rel_limbs;
        row.descriptor_means[5] += d.n_active_hinges;
    }
    row.mean_fitness = sum / n;
    for (double& v : row.descriptor_means)
        v /= n;

    if (mode == Mode::EvolutionPlusLearning && !state.offspring.empty()) {
        double delta = 0.0;
        for (const auto& child : state.offspring)
            delta += evolution::learning_delta(child);
        row.mean_delta = delta / static_cast<double>(state.offspring.size());
    }
    return row;
}

namespace {

std::string format_row(const GenerationRow& r) {
    std::string out = fmt::format("{},{},{},{:.9g},{:.9g},{:.9g},", r.run, r.generation, evolution::to_string(r.mode),
                                  r.mean_fitness, r.max_fitness, r.min_fitness);
    if (r.mean_delta)
        out += fmt::format("{:.9g}", *r.mean_delta);
    for (double d : r.descriptor_means)
        out += fmt::format(",{:.9g}", d);
    out += fmt::format(",{}\n", r.cumulative_evaluations);
    return out;
}

std::string generations_header() {
    std::string h = "run,generation,mode,mean_fitness,max_fitness,min_fitness,mean_delta";
    for (auto name : kDescriptorNames)
        h += fmt::format(",{}", name);
    return h + ",cumulative_evaluations\n";
}

std::ofstream open_csv(const fs::path& path, std::string_view schema, std::string_view header) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw std::runtime_error(fmt::format("cannot open {} for writing", path.string()));
    out.exceptions(std::ios::failbit | std::ios::badbit);
    out << "# " << schema << '\n' << header;
    out.flush();
    return out;
}

/// Serialises the output of concurrent runs: rows of the lowest unfinished
/// run go straight to disk, later runs are buffered until their turn.
class OrderedWriter {
public:
    enum Stream { Generations, Learning, Runs, Count };

    OrderedWriter(std::array<std::ofstream*, Count> files, std::size_t runs)
        : files_(files), pending_(runs), done_(runs, false) {}

    void write(std::size_t run, Stream stream, std::string text) {
        std::lock_guard lock(mutex_);
        if (run == head_) {
            *files_[stream] << text;
            files_[stream]->flush();
        } else {
            pending_[run][stream] += text;
        }
    }

    void finish(std::size_t run) {
        std::lock_guard lock(mutex_);
        done_[run] = true;
        while (head_ < done_.size() && done_[head_]) {
            ++head_;
            if (head_ < done_.size())
                flush_pending(head_);
        }
    }

    void mark_partial(std::string_view reason) {
        std::lock_guard lock(mutex_);
        try {
            *files_[Generations] << "# partial: " << reason << '\n';
            files_[Generations]->flush();
        } catch (const std::exception&) {
            spdlog::error("could not write the partial-log marker");
        }
    }

private:
    void flush_pending(std::size_t run) {
        for (std::size_t s = 0; s < Count; ++s) {
            *files_[s] << pending_[run][s];
            pending_[run][s].clear();
            files_[s]->flush();
        }
    }

    std::array<std::ofstream*, Count> files_;
    std::vector<std::array<std::string, Count>> pending_;
    std::vector<bool> done_;
    std::size_t head_ = 0;
    std::mutex mutex_;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    out.exceptions(std::ios::failbit | std::ios::badbit);
    out << text;
}

RunSummary run_one(const ExperimentSpec& spec, std::size_t run, OrderedWriter& writer) {
    const auto start = std::chrono::steady_clock::now();
    const auto& settings = spec.settings;
    const Mode mode = settings.evo.mode;
    const std::uint64_t seed = spec.master_seed + run;
    const std::string tag = mode_tag(mode);

    auto log_learning = [&](const std::vector<evolution::Individual>& individuals, std::size_t generation) {
        std::string text;
        for (const auto& ind : individuals)
            for (const auto& l : ind.learning_log)
                text += fmt::format("{},{},{},{},{:.9g},{:.9g},{},{}\n", run, generation, ind.id, l.generation,
                                    l.best_fitness, l.mean_fitness, l.archive_size, l.true_evaluations);
        if (!text.empty())
            writer.write(run, OrderedWriter::Learning, std::move(text));
    };

    auto state = evolution::initialize(settings, seed);
    log_learning(state.population, 0);
    Rng rng = make_rng(seed, {0xE0});
    for (std::size_t g = 0; g < settings.evo.generations; ++g) {
        state = evolution::run_generation(std::move(state), settings, rng);
        log_learning(state.offspring, state.generation);
        if (spec.observer)
            spec.observer(run, state);
        writer.write(run, OrderedWriter::Generations, format_row(generation_row(state, run, mode)));
    }

    RunSummary summary;
    summary.run = run;
    summary.seed = seed;
    const auto last = generation_row(state, run, mode);
    summary.final_mean_fitness = last.mean_fitness;
    summary.final_max_fitness = last.max_fitness;
    summary.true_evaluations = state.true_evaluations;
    summary.expected_evaluations = evolution::expected_evaluations(settings);
    writer.write(run, OrderedWriter::Runs,
                 fmt::format("{},{},{:.9g},{:.9g},{},{}\n", run, seed, summary.final_mean_fitness,
                             summary.final_max_fitness, summary.true_evaluations, summary.expected_evaluations));

    const auto& best = state.population.front();
    const fs::path stem = spec.output_dir / fmt::format("best_{}_run{}", tag, run);
    write_text(stem.string() + ".genotype", lsystem::to_text(best.genotype));
    write_text(stem.string() + ".body", morphology::to_text(best.body));
    if (spec.dump_trajectories) {
        std::ostringstream traj;
        locomotion::write_trajectory(traj, locomotion::simulate(best.body, best.weights, settings.sim),
                                     settings.sim.dt);
        write_text(stem.string() + ".trajectory", traj.str());
    }

    summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    spdlog::info("{} run {} done: final max {:.6g} cm/s, {} true evaluations, {:.1f} s", evolution::to_string(mode),
                 run, summary.final_max_fitness, summary.true_evaluations, summary.wall_seconds);
    return summary;
}

} // namespace

ExperimentLog run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    fs::create_directories(spec.output_dir);
    const Mode mode = spec.settings.evo.mode;
    const std::string tag = mode_tag(mode);

    auto generations = open_csv(spec.output_dir / fmt::format("generations_{}.csv", tag), kGenerationsSchema,
                                generations_header());
    auto learning = open_csv(spec.output_dir / fmt::format("learning_{}.csv", tag), kLearningSchema,
                             "run,generation,individual,learner_generation,best_fitness,mean_fitness,archive_size,"
                             "true_evaluations\n");
    auto runs = open_csv(spec.output_dir / fmt::format("runs_{}.csv", tag), kRunsSchema,
                         "run,seed,final_mean_fitness,final_max_fitness,true_evaluations,expected_evaluations\n");
    OrderedWriter writer({&generations, &learning, &runs}, spec.repetitions);

    std::vector<RunSummary> summaries(spec.repetitions);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (std::size_t run = next++; run < spec.repetitions; run = next++) {
            try {
                summaries[run] = run_one(spec, run, writer);
                writer.finish(run);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = spec.repetitions;
                return;
            }
        }
    };

    const std::size_t threads = std::min(spec.workers, spec.repetitions);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < threads; ++i)
            pool.emplace_back(worker);
    }

    if (failure) {
        try {
            std::rethrow_exception(failure);
        } catch (const std::exception& e) {
            writer.mark_partial(e.what());
        }
        std::rethrow_exception(failure);
    }

    {
        std::ofstream timing(spec.output_dir / fmt::format("timing_{}.csv", tag), std::ios::trunc);
        timing << "run,wall_seconds\n";
        for (const auto& s : summaries)
            timing << fmt::format("{},{:.3f}\n", s.run, s.wall_seconds);
    }

    ExperimentLog log;
    log.mode = mode;
    log.runs = std::move(summaries);
    log.rows = read_log(spec.output_dir, mode).rows;
    return log;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ','))
        out.push_back(field);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

/// Data lines of a schema-tagged CSV (schema row and column header removed).
std::vector<std::vector<std::string>> read_csv(const fs::path& path, std::string_view schema, std::size_t columns) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error(fmt::format("cannot open {}", path.string()));
    std::string line;
    if (!std::getline(in, line) || line != fmt::format("# {}", schema))
        throw std::runtime_error(fmt::format("{}: expected schema '{}'", path.string(), schema));
    std::getline(in, line);  // column header
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#')
            continue;
        auto fields = split_csv(line);
        if (fields.size() != columns)
            throw std::runtime_error(
                fmt::format("{}: expected {} columns, got {}", path.string(), columns, fields.size()));
        rows.push_back(std::move(fields));
    }
    return rows;
}

} // namespace

ExperimentLog read_log(const fs::path& dir, Mode mode) {
    ExperimentLog log;
    log.mode = mode;
    const std::string tag = mode_tag(mode);
    for (const auto& f : read_csv(dir / fmt::format("generations_{}.csv", tag), kGenerationsSchema, 14)) {
        GenerationRow r;
        r.run = std::stoul(f[0]);
        r.generation = std::stoul(f[1]);
        const auto parsed = evolution::parse_mode(f[2]);
        if (!parsed || *parsed != mode)
            throw std::runtime_error(fmt::format("unexpected mode '{}' in generations_{}.csv", f[2], tag));
        r.mode = mode;
        r.mean_fitness = std::stod(f[3]);
        r.max_fitness = std::stod(f[4]);
        r.min_fitness = std::stod(f[5]);
        if (!f[6].empty())
            r.mean_delta = std::stod(f[6]);
        for (std::size_t i = 0; i < 6; ++i)
            r.descriptor_means[i] = std::stod(f[7 + i]);
        r.cumulative_evaluations = std::stoull(f[13]);
        log.rows.push_back(r);
    }
    const fs::path runs = dir / fmt::format("runs_{}.csv", tag);
    if (fs::exists(runs)) {
        for (const auto& f : read_csv(runs, kRunsSchema, 6)) {
            RunSummary s;
            s.run = std::stoul(f[0]);
            s.seed = std::stoull(f[1]);
            s.final_mean_fitness = std::stod(f[2]);
            s.final_max_fitness = std::stod(f[3]);
            s.true_evaluations = std::stoull(f[4]);
            s.expected_evaluations = std::stoull(f[5]);
            log.runs.push_back(s);
        }
    }
    return log;
}

// ---------------------------------------------------------------------------

namespace {

double quantile_sorted(std::span<const double> sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

Interval bootstrap_mean_ci(std::span<const double> values, std::size_t resamples, double level, std::uint64_t seed) {
    if (values.empty())
        throw std::invalid_argument("bootstrap_mean_ci: no values");
    Interval ci;
    ci.estimate = mean_of(values);
    if (values.size() == 1 || resamples == 0) {
        ci.lo = ci.hi = ci.estimate;
        return ci;
    }
    Rng rng{seed};
    std::vector<double> means(resamples);
    for (auto& m : means) {
        double sum = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i)
            sum += values[uniform_int<std::size_t>(rng, 0, values.size() - 1)];
        m = sum / static_cast<double>(values.size());
    }
    std::sort(means.begin(), means.end());
    const double tail = (1.0 - level) / 2.0;
    ci.lo = quantile_sorted(means, tail);
    ci.hi = quantile_sorted(means, 1.0 - tail);
    // every resample mean of a constant sample equals the constant up to rounding
    ci.lo = std::min(ci.lo, ci.estimate);
    ci.hi = std::max(ci.hi, ci.estimate);
    return ci;
}

RankSumTest rank_sum_test(std::span<const double> a, std::span<const double> b) {
    RankSumTest t;
    t.n1 = a.size();
    t.n2 = b.size();
    if (a.empty() || b.empty())
        return t;

    std::vector<std::pair<double, int>> all;
    for (double v : a)
        all.emplace_back(v, 0);
    for (double v : b)
        all.emplace_back(v, 1);
    std::sort(all.begin(), all.end());
    const std::size_t n = all.size();

    bool ties = false;
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && all[j].first == all[i].first)
            ++j;
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        const double run = static_cast<double>(j - i);
        if (j - i > 1) {
            ties = true;
            tie_term += run * run * run - run;
        }
        for (std::size_t k = i; k < j; ++k)
            if (all[k].second == 0)
                t.statistic += rank;
        i = j;
    }

    const double n1 = static_cast<double>(t.n1), n2 = static_cast<double>(t.n2), nn = static_cast<double>(n);
    if (!ties && n <= 60) {
        // count subsets of size n1 of {1..n} by rank sum
        const std::size_t max_sum = n * (n + 1) / 2;
        std::vector<std::vector<double>> ways(t.n1 + 1, std::vector<double>(max_sum + 1, 0.0));
        ways[0][0] = 1.0;
        for (std::size_t r = 1; r <= n; ++r)
            for (std::size_t k = std::min(r, t.n1); k >= 1; --k)
                for (std::size_t s = max_sum; s >= r; --s)
                    ways[k][s] += ways[k - 1][s - r];
        const auto w = static_cast<std::size_t>(std::llround(t.statistic));
        double total = 0.0, below = 0.0, above = 0.0;
        for (std::size_t s = 0; s <= max_sum; ++s) {
            total += ways[t.n1][s];
            if (s <= w)
                below += ways[t.n1][s];
            if (s >= w)
                above += ways[t.n1][s];
        }
        t.p_value = std::min(1.0, 2.0 * std::min(below, above) / total);
        t.exact = true;
        return t;
    }

    const double mean = n1 * (nn + 1.0) / 2.0;
    const double var = n1 * n2 / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if (var <= 0.0) {
        t.p_value = 1.0;
        return t;
    }
    const double z = (std::abs(t.statistic - mean) - 0.5) / std::sqrt(var);
    t.p_value = std::min(1.0, std::erfc(std::max(z, 0.0) / std::sqrt(2.0)));
    return t;
}

Summary summarize(std::span<const ExperimentLog> logs, std::size_t resamples, std::uint64_t seed) {
    if (logs.empty())
        throw std::invalid_argument("summarize: no logs");
    Summary summary;
    for (const auto& log : logs) {
        std::map<std::size_t, std::vector<const GenerationRow*>> by_generation;
        std::map<std::size_t, const GenerationRow*> last_of_run;
        for (const auto& r : log.rows) {
            by_generation[r.generation].push_back(&r);
            auto& last = last_of_run[r.run];
            if (!last || r.generation > last->generation)
                last = &r;
        }
        for (const auto& [generation, rows] : by_generation) {
            SummaryRow s;
            s.mode = log.mode;
            s.generation = generation;
            s.runs = rows.size();
            std::vector<double> means, maxes, deltas;
            double evaluations = 0.0;
            for (const auto* r : rows) {
                means.push_back(r->mean_fitness);
                maxes.push_back(r->max_fitness);
                if (r->mean_delta)
                    deltas.push_back(*r->mean_delta);
                for (std::size_t i = 0; i < 6; ++i)
                    s.descriptor_means[i] += r->descriptor_means[i];
                evaluations += static_cast<double>(r->cumulative_evaluations);
            }
            for (double& d : s.descriptor_means)
                d /= static_cast<double>(rows.size());
            s.cumulative_evaluations = evaluations / static_cast<double>(rows.size());
            s.mean_fitness = bootstrap_mean_ci(means, resamples, 0.95, seed);
            s.max_fitness = bootstrap_mean_ci(maxes, resamples, 0.95, seed + 1);
            if (!deltas.empty())
                s.mean_delta = bootstrap_mean_ci(deltas, resamples, 0.95, seed + 2);
            summary.rows.push_back(s);
        }

        FinalDistribution fin;
        fin.mode = log.mode;
        for (const auto& [run, row] : last_of_run) {
            fin.mean_fitness.push_back(row->mean_fitness);
            fin.max_fitness.push_back(row->max_fitness);
        }
        if (!fin.max_fitness.empty())
            fin.mean_best_fitness = mean_of(fin.max_fitness);
        for (const auto& r : log.runs) {
            fin.true_evaluations += r.true_evaluations;
            fin.expected_evaluations += r.expected_evaluations;
        }
        summary.finals.push_back(std::move(fin));
    }
    if (summary.finals.size() >= 2) {
        summary.final_mean_test = rank_sum_test(summary.finals[0].mean_fitness, summary.finals[1].mean_fitness);
        summary.final_max_test = rank_sum_test(summary.finals[0].max_fitness, summary.finals[1].max_fitness);
    }
    return summary;
}

void write_summary(const fs::path& dir, const Summary& summary) {
    std::string header = "mode,generation,runs,mean_fitness,mean_fitness_lo,mean_fitness_hi,max_fitness,"
                         "max_fitness_lo,max_fitness_hi,mean_delta,mean_delta_lo,mean_delta_hi";
    for (auto name : kDescriptorNames)
        header += fmt::format(",{}", name);
    header += ",cumulative_evaluations\n";
    auto out = open_csv(dir / "summary.csv", kSummarySchema, header);
    for (const auto& r : summary.rows) {
        out << fmt::format("{},{},{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},", evolution::to_string(r.mode),
                           r.generation, r.runs, r.mean_fitness.estimate, r.mean_fitness.lo, r.mean_fitness.hi,
                           r.max_fitness.estimate, r.max_fitness.lo, r.max_fitness.hi);
        if (r.mean_delta)
            out << fmt::format("{:.9g},{:.9g},{:.9g}", r.mean_delta->estimate, r.mean_delta->lo, r.mean_delta->hi);
        else
            out << ",,";
        for (double d : r.descriptor_means)
            out << fmt::format(",{:.9g}", d);
        out << fmt::format(",{:.9g}\n", r.cumulative_evaluations);
    }

    auto fin = open_csv(dir / "final.csv", kFinalSchema, "mode,run,final_mean_fitness,final_max_fitness\n");
    for (const auto& f : summary.finals)
        for (std::size_t i = 0; i < f.mean_fitness.size(); ++i)
            fin << fmt::format("{},{},{:.9g},{:.9g}\n", evolution::to_string(f.mode), i, f.mean_fitness[i],
                               f.max_fitness[i]);
}

} // namespace bodybrain::experiment
