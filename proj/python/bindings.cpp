#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bodybrain/controller.hpp"
#include "bodybrain/experiment.hpp"

namespace py = pybind11;
using namespace bodybrain;

namespace {

std::vector<lsystem::RobotSymbol> parse_word(const std::vector<std::string>& tokens) {
    std::vector<lsystem::RobotSymbol> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        const auto s = lsystem::parse_symbol(t);
        if (!s)
            throw py::value_error("unknown robot symbol '" + t + "'");
        out.push_back(*s);
    }
    return out;
}

py::dict descriptor_dict(const morphology::DescriptorVector& d) {
    py::dict out;
    out["absolute_size"] = d.absolute_size;
    out["width"] = d.width;
    out["proportion"] = d.proportion;
    out["n_bricks"] = d.n_bricks;
    out["rel_limbs"] = d.rel_limbs;
    out["n_active_hinges"] = d.n_active_hinges;
    return out;
}

learner::LearnerConfig learner_config(std::size_t population, double F, double p, std::size_t k,
                                      std::size_t generations) {
    learner::LearnerConfig c;
    c.population = population;
    c.scaling = F;
    c.crossover_p = p;
    c.neighbors = k;
    c.generations = generations;
    return c;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Modular robot body/brain co-optimisation core";

    py::register_exception<controller::DimensionMismatch>(m, "DimensionMismatch", PyExc_ValueError);
    py::register_exception<lsystem::ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<learner::ArchiveTooSmall>(m, "ArchiveTooSmall", PyExc_ValueError);
    py::register_exception<evolution::MissingBaseline>(m, "MissingBaseline", PyExc_RuntimeError);

    // --- L-system -----------------------------------------------------------
    m.def(
        "rewrite",
        [](const std::vector<std::string>& alphabet, const std::string& axiom,
           const std::map<std::string, std::vector<std::string>>& rules, int iterations, std::size_t max_symbols) {
            lsystem::Grammar g{{alphabet.begin(), alphabet.end()}, axiom, {rules.begin(), rules.end()}};
            return lsystem::rewrite(g, iterations, max_symbols);
        },
        py::arg("alphabet"), py::arg("axiom"), py::arg("rules"), py::arg("iterations"),
        py::arg("max_symbols") = lsystem::kDefaultMaxSymbols);

    py::class_<lsystem::Genotype>(m, "Genotype")
        .def_static("random", [](std::uint64_t seed) { return lsystem::random_genotype(seed); }, py::arg("seed"))
        .def_static("from_text", &lsystem::from_text, py::arg("text"))
        .def("to_text", &lsystem::to_text)
        .def("gene_count", &lsystem::Genotype::gene_count)
        .def("weight_genes", &lsystem::Genotype::weight_genes)
        .def("rule", [](const lsystem::Genotype& g, const std::string& head) {
            const auto s = lsystem::parse_symbol(head);
            if (!s || !lsystem::is_module(*s))
                throw py::value_error("rules exist for C, B and A only");
            std::vector<std::string> out;
            for (const auto& gene : g.rule(*s))
                out.emplace_back(lsystem::to_string(gene.symbol));
            return out;
        })
        .def(
            "develop",
            [](const lsystem::Genotype& g, int iterations, std::size_t max_symbols) {
                std::vector<std::pair<std::string, int>> out;
                for (const auto& ts : lsystem::develop(g, iterations, max_symbols))
                    out.emplace_back(lsystem::to_string(ts.symbol), ts.gene);
                return out;
            },
            py::arg("iterations") = lsystem::kDefaultIterations,
            py::arg("max_symbols") = lsystem::kDefaultMaxSymbols)
        .def("__eq__", [](const lsystem::Genotype& a, const lsystem::Genotype& b) { return a == b; })
        .def("__repr__", &lsystem::to_text);

    m.def(
        "crossover",
        [](const lsystem::Genotype& a, const lsystem::Genotype& b, std::uint64_t seed) {
            Rng rng{seed};
            return lsystem::crossover(a, b, rng);
        },
        py::arg("a"), py::arg("b"), py::arg("seed"));
    m.def(
        "mutate",
        [](const lsystem::Genotype& g, std::uint64_t seed, double rule_probability, double weight_sigma) {
            Rng rng{seed};
            return lsystem::mutate(g, rng, {rule_probability, weight_sigma});
        },
        py::arg("genotype"), py::arg("seed"), py::arg("rule_probability") = 0.2, py::arg("weight_sigma") = 0.1);

    // --- morphology ---------------------------------------------------------
    py::class_<morphology::BodyPlan>(m, "BodyPlan")
        .def_property_readonly("size", &morphology::BodyPlan::size)
        .def_readonly("n_joints", &morphology::BodyPlan::n_joints)
        .def_property_readonly("bounding_box",
                               [](const morphology::BodyPlan& b) {
                                   return std::make_pair(b.bounding_box.width, b.bounding_box.length);
                               })
        .def("cells",
             [](const morphology::BodyPlan& b) {
                 std::vector<std::pair<int, int>> out;
                 for (const auto& mod : b.modules)
                     out.emplace_back(mod.grid_pos.x, mod.grid_pos.y);
                 return out;
             })
        .def("kinds",
             [](const morphology::BodyPlan& b) {
                 std::vector<std::string> out;
                 for (const auto& mod : b.modules)
                     out.emplace_back(morphology::to_string(mod.kind));
                 return out;
             })
        .def("to_text", &morphology::to_text);

    m.def(
        "decode",
        [](const std::vector<std::string>& symbols, std::size_t max_modules) {
            auto r = morphology::decode(parse_word(symbols), max_modules);
            return std::make_pair(std::move(r.body), r.degenerate);
        },
        py::arg("symbols"), py::arg("max_modules") = morphology::kMaxModules,
        "Returns (body, degenerate).");
    m.def("descriptors", [](const morphology::BodyPlan& b) { return descriptor_dict(morphology::descriptors(b)); });
    m.def("max_limbs", &morphology::max_limbs);

    // --- controller -----------------------------------------------------------
    py::class_<controller::CpgNetwork>(m, "CpgNetwork")
        .def(py::init<std::size_t, std::vector<double>>(), py::arg("n_joints"), py::arg("weights"))
        .def_property_readonly("joints", &controller::CpgNetwork::joints)
        .def_property_readonly("x", [](const controller::CpgNetwork& n) {
            return std::vector<double>(n.x().begin(), n.x().end());
        })
        .def_property_readonly("y", [](const controller::CpgNetwork& n) {
            return std::vector<double>(n.y().begin(), n.y().end());
        })
        .def_property_readonly("outputs", [](const controller::CpgNetwork& n) {
            return std::vector<double>(n.outputs().begin(), n.outputs().end());
        })
        .def("step", [](controller::CpgNetwork& n, double dt) {
            const auto out = n.step(dt);
            return std::vector<double>(out.begin(), out.end());
        });

    // --- locomotion -----------------------------------------------------------
    py::class_<locomotion::SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("eval_time", &locomotion::SimConfig::eval_time)
        .def_readwrite("dt", &locomotion::SimConfig::dt)
        .def_readwrite("module_edge", &locomotion::SimConfig::module_edge)
        .def_readwrite("joint_amplitude", &locomotion::SimConfig::joint_amplitude)
        .def_readwrite("lateral_drag", &locomotion::SimConfig::lateral_drag);

    m.def(
        "evaluate",
        [](const morphology::BodyPlan& body, const std::vector<double>& weights, const locomotion::SimConfig& cfg) {
            py::gil_scoped_release release;
            return locomotion::evaluate(body, weights, cfg);
        },
        py::arg("body"), py::arg("weights"), py::arg("config") = locomotion::SimConfig{},
        "Center-of-mass speed in cm/s.");
    m.def(
        "simulate",
        [](const morphology::BodyPlan& body, const std::vector<double>& weights, const locomotion::SimConfig& cfg,
           std::tuple<double, double, double> pose) {
            locomotion::Trajectory t;
            {
                py::gil_scoped_release release;
                t = locomotion::simulate(body, weights, cfg,
                                         {std::get<0>(pose), std::get<1>(pose), std::get<2>(pose)});
            }
            Eigen::MatrixXd com(static_cast<Eigen::Index>(t.com.size()), 2);
            Eigen::MatrixXd poses(static_cast<Eigen::Index>(t.poses.size()), 3);
            for (std::size_t i = 0; i < t.com.size(); ++i) {
                const auto r = static_cast<Eigen::Index>(i);
                com.row(r) << t.com[i].x, t.com[i].y;
                poses.row(r) << t.poses[i].x, t.poses[i].y, t.poses[i].theta;
            }
            return py::make_tuple(com, poses);
        },
        py::arg("body"), py::arg("weights"), py::arg("config") = locomotion::SimConfig{},
        py::arg("pose") = std::make_tuple(0.0, 0.0, 0.0), "Returns (com[n, 2], poses[n, 3]).");
    m.def(
        "crawl_step",
        [](const std::vector<std::pair<double, double>>& prev, const std::vector<std::pair<double, double>>& next) {
            std::vector<locomotion::Vec2> p, q;
            for (auto [x, y] : prev)
                p.push_back({x, y});
            for (auto [x, y] : next)
                q.push_back({x, y});
            const auto fit = locomotion::crawl_step(p, q);
            return py::make_tuple(fit.transform.rotation, fit.transform.translation.x, fit.transform.translation.y);
        },
        "Least-squares rigid fit; returns (rotation, tx, ty).");

    // --- learner --------------------------------------------------------------
    m.def(
        "revde_triple",
        [](const std::vector<double>& x1, const std::vector<double>& x2, const std::vector<double>& x3, double F) {
            return learner::revde_triple(x1, x2, x3, F);
        },
        py::arg("x1"), py::arg("x2"), py::arg("x3"), py::arg("F"));
    m.def("revde_matrix", &learner::revde_matrix, py::arg("F"));
    m.def(
        "knn_predict",
        [](const std::vector<std::vector<double>>& points, const std::vector<double>& fitness,
           const std::vector<double>& query, std::size_t k) {
            if (points.size() != fitness.size())
                throw py::value_error("one fitness per archived point required");
            learner::Archive archive;
            for (std::size_t i = 0; i < points.size(); ++i)
                archive.add({points[i], fitness[i], true});
            return learner::knn_predict(archive, query, k);
        },
        py::arg("points"), py::arg("fitness"), py::arg("query"), py::arg("k"));
    m.def(
        "learn",
        [](const std::vector<double>& initial, const std::function<double(std::vector<double>)>& evaluator,
           std::uint64_t seed, std::size_t population, double F, double p, std::size_t k, std::size_t generations) {
            Rng rng{seed};
            const auto cfg = learner_config(population, F, p, k, generations);
            auto r = learner::learn(
                initial, cfg, [&](std::span<const double> w) { return evaluator({w.begin(), w.end()}); }, rng);
            py::dict out;
            out["best_weights"] = r.best_weights;
            out["best_fitness"] = r.best_fitness;
            out["generated"] = r.budget.generated;
            out["truly_evaluated"] = r.budget.truly_evaluated;
            py::list log;
            for (const auto& g : r.log)
                log.append(py::make_tuple(g.generation, g.best_fitness, g.mean_fitness, g.archive_size,
                                          g.true_evaluations));
            out["log"] = log;
            return out;
        },
        py::arg("initial"), py::arg("evaluator"), py::arg("seed") = 0, py::arg("population") = 25,
        py::arg("F") = 0.5, py::arg("p") = 0.9, py::arg("k") = 3, py::arg("generations") = 10);

    // --- experiments ----------------------------------------------------------
    m.def(
        "run_experiment",
        [](const std::string& mode, const std::string& preset, std::uint64_t seed, const std::filesystem::path& out,
           std::optional<std::size_t> reps, std::optional<std::filesystem::path> config) {
            const auto parsed_mode = evolution::parse_mode(mode);
            const auto parsed_preset = experiment::parse_preset(preset);
            if (!parsed_mode || !parsed_preset)
                throw py::value_error("mode must be evo or evo+learn, preset paper or desk");
            auto spec = experiment::ExperimentSpec::from_preset(*parsed_preset, *parsed_mode);
            if (config)
                experiment::apply_config_file(spec, *config);
            spec.settings.evo.mode = *parsed_mode;
            spec.master_seed = seed;
            spec.output_dir = out;
            if (reps)
                spec.repetitions = *reps;
            experiment::ExperimentLog log;
            {
                py::gil_scoped_release release;
                log = experiment::run_experiment(spec);
            }
            py::dict result;
            result["mean_best_fitness"] = log.mean_best_fitness();
            py::list runs;
            for (const auto& r : log.runs) {
                py::dict d;
                d["run"] = r.run;
                d["seed"] = r.seed;
                d["final_mean_fitness"] = r.final_mean_fitness;
                d["final_max_fitness"] = r.final_max_fitness;
                d["true_evaluations"] = r.true_evaluations;
                d["expected_evaluations"] = r.expected_evaluations;
                runs.append(d);
            }
            result["runs"] = runs;
            result["rows"] = log.rows.size();
            return result;
        },
        py::arg("mode"), py::arg("preset") = "desk", py::arg("seed") = 1, py::arg("out") = "results",
        py::arg("reps") = py::none(), py::arg("config") = py::none());
    m.def(
        "summarize",
        [](const std::filesystem::path& dir) {
            std::vector<experiment::ExperimentLog> logs;
            for (auto mode : {evolution::Mode::EvolutionOnly, evolution::Mode::EvolutionPlusLearning})
                if (std::filesystem::exists(dir / ("generations_" + experiment::mode_tag(mode) + ".csv")))
                    logs.push_back(experiment::read_log(dir, mode));
            if (logs.empty())
                throw py::value_error("no generation logs in " + dir.string());
            const auto s = experiment::summarize(logs);
            experiment::write_summary(dir, s);
            py::dict out;
            for (const auto& f : s.finals)
                out[py::str(std::string(evolution::to_string(f.mode)))] = f.mean_best_fitness;
            if (s.final_max_test)
                out["p_value"] = s.final_max_test->p_value;
            return out;
        },
        py::arg("dir"), "Writes summary.csv and final.csv; returns mean best fitness per mode.");
}
