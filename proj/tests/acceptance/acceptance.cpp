// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "bodybrain/experiment.hpp"

namespace fs = std::filesystem;
using namespace bodybrain;
using evolution::Mode;
using lsystem::RobotSymbol;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

int failures = 0;

void criterion(const std::string& name, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = fmt::format("exception: {}", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    fmt::print("{} {} ({:.1f} s){}{}\n", o.pass ? "PASS" : "FAIL", name, secs, o.detail.empty() ? "" : ": ",
               o.detail);
    std::fflush(stdout);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<double> random_vector(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v)
        x = uniform_real(rng, -1.0, 1.0);
    return v;
}

// ---------------------------------------------------------------------------

Outcome rewriting() {
    Outcome o;
    const lsystem::Grammar g{{"X", "Y", "Z"}, "X", {{"X", {"X", "Y"}}, {"Y", {"Z"}}, {"Z", {"X", "Z"}}}};
    const std::vector<std::string> expected{"X", "XY", "XYZ", "XYZXZ"};
    for (int i = 0; i <= 3; ++i) {
        std::string got;
        for (const auto& s : lsystem::rewrite(g, i))
            got += s;
        o.require(got == expected[static_cast<std::size_t>(i)],
                  fmt::format("iteration {} gave {}, expected {}", i, got, expected[static_cast<std::size_t>(i)]));
    }
    return o;
}

Outcome revde_algebra() {
    Outcome o;
    const auto t = learner::revde_triple(std::vector<double>{1}, std::vector<double>{0}, std::vector<double>{0}, 0.5);
    o.require(t[0][0] == 1.0 && t[1][0] == -0.5 && t[2][0] == 0.75,
              fmt::format("triple gave ({}, {}, {})", t[0][0], t[1][0], t[2][0]));
    const Eigen::Matrix3d r = learner::revde_matrix(0.5);
    const Eigen::Matrix3d inv = r.inverse();
    o.require(std::abs(r.determinant()) > 1e-9, "R is singular");
    o.require((inv * r - Eigen::Matrix3d::Identity()).norm() < 1e-10, "R^-1 R differs from I");
    Rng rng{2021};
    double worst_map = 0.0, worst_back = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const double x1 = uniform_real(rng, -1, 1), x2 = uniform_real(rng, -1, 1), x3 = uniform_real(rng, -1, 1);
        const auto ys = learner::revde_triple(std::vector<double>{x1}, std::vector<double>{x2},
                                              std::vector<double>{x3}, 0.5);
        const Eigen::Vector3d x(x1, x2, x3);
        const Eigen::Vector3d y = r * x;
        for (int i = 0; i < 3; ++i)
            worst_map = std::max(worst_map, std::abs(y(i) - ys[static_cast<std::size_t>(i)][0]) /
                                                std::max(1.0, std::abs(y(i))));
        worst_back = std::max(worst_back, (inv * Eigen::Vector3d(ys[0][0], ys[1][0], ys[2][0]) - x).norm());
    }
    o.require(worst_map <= 1e-12, fmt::format("matrix vs triple differs by {:.3g}", worst_map));
    o.require(worst_back <= 1e-9, fmt::format("round trip error {:.3g}", worst_back));
    return o;
}

Outcome knn() {
    Outcome o;
    Rng rng{7};
    for (int q = 0; q < 100; ++q) {
        learner::Archive archive;
        const auto size = uniform_int<std::size_t>(rng, 1, 200);
        const auto dim = uniform_int<std::size_t>(rng, 1, 30);
        while (archive.size() < size)
            archive.add({random_vector(rng, dim), uniform_real(rng, 0.0, 0.05), true});
        const auto query = random_vector(rng, dim);
        const auto k = uniform_int<std::size_t>(rng, 1, std::min<std::size_t>(size, 5));

        std::vector<std::pair<double, std::size_t>> order;
        for (std::size_t i = 0; i < archive.size(); ++i) {
            double d2 = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = archive.records()[i].weights[d] - query[d];
                d2 += diff * diff;
            }
            order.emplace_back(d2, i);
        }
        std::sort(order.begin(), order.end());
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i)
            sum += archive.records()[order[i].second].fitness;
        const double oracle = sum / static_cast<double>(k);
        const double got = learner::knn_predict(archive, query, k);
        o.require(got == oracle, fmt::format("query {}: {} vs oracle {}", q, got, oracle));
    }
    return o;
}

struct Placed {
    morphology::ModuleKind kind;
    int x, y, heading, parent, face;
};

Outcome descriptor_suite() {
    Outcome o;
    static constexpr int sx[4] = {0, -1, 0, 1};
    static constexpr int sy[4] = {1, 0, -1, 0};
    auto turn = [](int h, int face) { return face == 1 ? (h + 1) % 4 : face == 2 ? (h + 3) % 4 : h; };

    std::vector<Placed> body{{morphology::ModuleKind::Core, 0, 0, 0, -1, -1}};
    std::size_t checked = 0;
    std::function<void(int, int)> grow;
    std::function<void(int, std::vector<RobotSymbol>&)> emit = [&](int id, std::vector<RobotSymbol>& out) {
        for (int f = 0; f < 3; ++f)
            for (std::size_t c = 0; c < body.size(); ++c)
                if (body[c].parent == id && body[c].face == f) {
                    out.push_back(f == 0 ? RobotSymbol::MountFront
                                         : f == 1 ? RobotSymbol::MountLeft : RobotSymbol::MountRight);
                    out.push_back(body[c].kind == morphology::ModuleKind::Brick ? RobotSymbol::Brick
                                                                               : RobotSymbol::Hinge);
                    emit(static_cast<int>(c), out);
                    out.push_back(RobotSymbol::Back);
                }
    };
    auto check = [&] {
        ++checked;
        std::vector<RobotSymbol> word{RobotSymbol::Core};
        emit(0, word);
        const auto d = morphology::descriptors(morphology::decode(word).body);
        const int m = static_cast<int>(body.size());
        int bricks = 0, hinges = 0, limbs = 0, x0 = 0, x1 = 0, y0 = 0, y1 = 0;
        for (std::size_t i = 0; i < body.size(); ++i) {
            const auto& b = body[i];
            bricks += b.kind == morphology::ModuleKind::Brick;
            hinges += b.kind == morphology::ModuleKind::ActiveHinge;
            x0 = std::min(x0, b.x), x1 = std::max(x1, b.x), y0 = std::min(y0, b.y), y1 = std::max(y1, b.y);
            if (i == 0)
                continue;
            int faces = 1;
            for (const auto& c : body)
                faces += c.parent == static_cast<int>(i);
            limbs += faces == 1;
        }
        const int w = x1 - x0 + 1, l = y1 - y0 + 1;
        const int lmax = m < 6 ? m - 1 : 2 * ((m - 6) / 3) + (m - 6) % 3 + 4;
        const double rel = lmax > 0 ? static_cast<double>(limbs) / lmax : 0.0;
        const bool ok = d.absolute_size == m && d.n_bricks == bricks && d.n_active_hinges == hinges &&
                        d.width == w &&
                        std::abs(d.proportion - static_cast<double>(std::min(w, l)) / std::max(w, l)) < 1e-15 &&
                        std::abs(d.rel_limbs - rel) < 1e-15;
        o.require(ok, fmt::format("body #{} with {} modules disagrees with the oracle", checked, m));
    };
    grow = [&](int last_parent, int last_face) {
        check();
        if (body.size() >= 6)
            return;
        for (int p = last_parent; p < static_cast<int>(body.size()); ++p)
            for (int f = (p == last_parent ? last_face + 1 : 0); f < 3; ++f) {
                const int h = turn(body[static_cast<std::size_t>(p)].heading, f);
                const int x = body[static_cast<std::size_t>(p)].x + sx[h];
                const int y = body[static_cast<std::size_t>(p)].y + sy[h];
                if (std::any_of(body.begin(), body.end(), [&](const Placed& b) { return b.x == x && b.y == y; }))
                    continue;
                for (auto kind : {morphology::ModuleKind::Brick, morphology::ModuleKind::ActiveHinge}) {
                    body.push_back({kind, x, y, h, p, f});
                    grow(p, f);
                    body.pop_back();
                }
            }
    };
    grow(0, -1);

    std::vector<RobotSymbol> chain{RobotSymbol::Core};
    for (int i = 0; i < 6; ++i)
        chain.push_back(RobotSymbol::MountFront), chain.push_back(RobotSymbol::Brick);
    const double chain_limbs = morphology::descriptors(morphology::decode(chain).body).rel_limbs;
    o.require(std::abs(chain_limbs - 0.2) < 1e-15, fmt::format("m=7 chain rel_limbs = {}", chain_limbs));
    if (o.pass)
        o.detail = fmt::format("{} bodies", checked);
    return o;
}

Outcome simulator_invariants() {
    Outcome o;
    const locomotion::SimConfig cfg;
    Rng rng{5};

    // pose invariance on developed random robots
    int tested = 0;
    while (tested < 5) {
        const auto g = lsystem::random_genotype(rng);
        const auto body = morphology::decode(lsystem::symbols_of(lsystem::develop(g))).body;
        if (body.n_joints < 2)
            continue;
        ++tested;
        const auto w = random_vector(rng, 3 * static_cast<std::size_t>(body.n_joints));
        const auto base = locomotion::simulate(body, w, cfg);
        const double d0 = locomotion::norm(base.com_end - base.com_start);
        const locomotion::Pose2 pose{uniform_real(rng, -3, 3), uniform_real(rng, -3, 3),
                                     uniform_real(rng, -std::numbers::pi, std::numbers::pi)};
        const auto moved = locomotion::simulate(body, w, cfg, pose);
        const double d1 = locomotion::norm(moved.com_end - moved.com_start);
        o.require(std::abs(d1 - d0) <= 1e-9 * std::max(d0, 1e-300),
                  fmt::format("pose changed the displacement: {} vs {}", d0, d1));
    }

    const auto core = morphology::decode(std::vector<RobotSymbol>{RobotSymbol::Core, RobotSymbol::Brick}).body;
    o.require(locomotion::evaluate(core, std::vector<double>{}, cfg) == 0.0, "0-joint robot moved");
    std::vector<RobotSymbol> chain{RobotSymbol::Core};
    for (int i = 0; i < 5; ++i)
        chain.push_back(RobotSymbol::Hinge);
    const auto snake = morphology::decode(chain).body;
    o.require(locomotion::evaluate(snake, std::vector<double>(15, 0.0), cfg) == 0.0, "zero-weight robot moved");

    // one hinge, any weights: reciprocal motion only
    double worst = 0.0;
    int singles = 0;
    while (singles < 50) {
        std::vector<RobotSymbol> word{RobotSymbol::Core};
        const int n = uniform_int(rng, 0, 6);
        const int hinge_at = uniform_int(rng, 0, n);
        for (int i = 0; i <= n; ++i) {
            if (i > 0 && bernoulli(rng, 0.5))
                word.push_back(bernoulli(rng, 0.5) ? RobotSymbol::MountLeft : RobotSymbol::MountRight);
            word.push_back(i == hinge_at ? RobotSymbol::Hinge : RobotSymbol::Brick);
        }
        const auto body = morphology::decode(word).body;
        if (body.n_joints != 1)
            continue;
        ++singles;
        const auto traj = locomotion::simulate(body, random_vector(rng, 3), cfg);
        const double length = cfg.module_edge * std::max(body.bounding_box.width, body.bounding_box.length);
        worst = std::max(worst, locomotion::norm(traj.com_end - traj.com_start) / length);
    }
    o.require(worst < 0.01, fmt::format("single hinge moved {:.3g} body lengths", worst));

    for (int pair = 0; pair < 50; ++pair) {
        const auto n = uniform_int<std::size_t>(rng, 2, 15);
        std::vector<locomotion::Vec2> p(n), q(n);
        for (auto& v : p)
            v = {uniform_real(rng, -1, 1), uniform_real(rng, -1, 1)};
        for (auto& v : q)
            v = {uniform_real(rng, -1, 1), uniform_real(rng, -1, 1)};
        const double best = locomotion::fit_residual(locomotion::crawl_step(p, q).transform, p, q);
        for (int k = 0; k < 1000; ++k) {
            const locomotion::Transform2 t{uniform_real(rng, -std::numbers::pi, std::numbers::pi),
                                           {uniform_real(rng, -2, 2), uniform_real(rng, -2, 2)}};
            o.require(best <= locomotion::fit_residual(t, p, q) + 1e-12,
                      fmt::format("random transform beat the fit on pair {}", pair));
        }
    }
    if (o.pass)
        o.detail = fmt::format("worst single-hinge drift {:.2e} body lengths", worst);
    return o;
}

Outcome budgets() {
    Outcome o;
    const auto spec = experiment::ExperimentSpec::from_preset(experiment::Preset::Paper, Mode::EvolutionOnly);
    auto state = evolution::initialize(spec.settings, 1);
    Rng rng = make_rng(1, {0xE0});
    for (std::size_t g = 0; g < spec.settings.evo.generations; ++g)
        state = evolution::run_generation(std::move(state), spec.settings, rng);
    o.require(state.true_evaluations == 800,
              fmt::format("paper evolution-only run spent {} evaluations", state.true_evaluations));

    // one learner invocation on a real offspring
    Rng pick{3};
    evolution::Individual child;
    do {
        child = evolution::express(lsystem::random_genotype(pick), spec.settings.evo);
    } while (child.body.n_joints < 2);
    std::size_t calls = 0;
    auto eval = [&](std::span<const double> w) {
        ++calls;
        return locomotion::evaluate(child.body, w, spec.settings.sim);
    };
    const auto r = learner::learn(child.weights, spec.settings.learner, eval, pick);
    o.require(r.budget.generated == 750, fmt::format("learner generated {} candidates", r.budget.generated));
    o.require(r.budget.truly_evaluated == 250 && calls == 250,
              fmt::format("learner performed {} true evaluations ({} calls)", r.budget.truly_evaluated, calls));
    if (o.pass)
        o.detail = "800 evaluations; 750 generated, 250 assessed";
    return o;
}

// desk-scale experiment outputs shared by the last three criteria
struct DeskRuns {
    fs::path root;
    experiment::ExperimentLog evo, learn;
    std::vector<double> deltas;
};

DeskRuns desk;

experiment::ExperimentSpec desk_spec(Mode mode, const fs::path& dir) {
    auto spec = experiment::ExperimentSpec::from_preset(experiment::Preset::Desk, mode);
    spec.master_seed = 1;
    spec.output_dir = dir;
    return spec;
}

Outcome learning_delta() {
    Outcome o;
    auto spec = desk_spec(Mode::EvolutionPlusLearning, desk.root / "a");
    spec.observer = [](std::size_t, const evolution::EvolutionState& state) {
        for (const auto& child : state.offspring)
            desk.deltas.push_back(evolution::learning_delta(child));
    };
    desk.learn = experiment::run_experiment(spec);
    double sum = 0.0, low = 0.0;
    for (double d : desk.deltas) {
        sum += d;
        low = std::min(low, d);
    }
    const double mean = sum / static_cast<double>(desk.deltas.size());
    o.require(low >= 0.0, fmt::format("negative delta {}", low));
    o.require(mean > 0.0, fmt::format("mean delta {}", mean));
    o.detail = fmt::format("{} offspring, min {:.3g}, mean {:.3g} cm/s", desk.deltas.size(), low, mean);
    return o;
}

double mean_final(const experiment::ExperimentLog& log) {
    double sum = 0.0;
    for (const auto& r : log.runs)
        sum += r.final_mean_fitness;
    return sum / static_cast<double>(log.runs.size());
}

Outcome directional() {
    Outcome o;
    desk.evo = experiment::run_experiment(desk_spec(Mode::EvolutionOnly, desk.root / "a"));
    const double evo = mean_final(desk.evo), learn = mean_final(desk.learn);
    o.require(desk.learn.runs.size() == 3 && desk.evo.runs.size() == 3, "expected three runs per mode");
    o.require(learn >= evo, fmt::format("evo+learn {:.4g} < evo {:.4g}", learn, evo));
    o.detail = fmt::format("evo+learn {:.4g} cm/s, evo {:.4g} cm/s", learn, evo);
    return o;
}

Outcome determinism() {
    Outcome o;
    experiment::run_experiment(desk_spec(Mode::EvolutionOnly, desk.root / "b"));
    experiment::run_experiment(desk_spec(Mode::EvolutionPlusLearning, desk.root / "b"));
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(desk.root / "a")) {
        const auto name = entry.path().filename().string();
        if (entry.path().extension() != ".csv" || name.rfind("timing_", 0) == 0)
            continue;
        ++files;
        o.require(slurp(entry.path()) == slurp(desk.root / "b" / name), fmt::format("{} differs", name));
    }
    o.require(files == 6, fmt::format("compared {} CSV files, expected 6", files));
    if (o.pass)
        o.detail = fmt::format("{} CSV files identical", files);
    return o;
}

} // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::warn);
    desk.root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "bodybrain_acceptance";
    fs::remove_all(desk.root);

    criterion("L-system rewriting reproduces X, XY, XYZ, XYZXZ", rewriting);
    criterion("RevDE algebra: worked triple, matrix agreement, reversibility", revde_algebra);
    criterion("K-NN surrogate equals a full-sort oracle", knn);
    criterion("Descriptors match the oracle on all bodies up to 6 modules; 7-chain limbs 0.2", descriptor_suite);
    criterion("Simulator invariants: pose, inactivity, single hinge, Procrustes optimality", simulator_invariants);
    criterion("Budget accounting: 800 evaluations; learner 750 generated / 250 assessed", budgets);
    criterion("Learning deltas non-negative with positive mean (desk, 3 seeds)", learning_delta);
    criterion("Evolution+learning final fitness >= evolution only (desk, 3 seeds)", directional);
    criterion("Same master seed gives byte-identical desk CSVs", determinism);

    fmt::print("{} criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
