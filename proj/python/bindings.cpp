#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "scalefree/experiment.hpp"
#include "scalefree/mdp.hpp"
#include "scalefree/scale_clip.hpp"
#include "scalefree/simplex_ftrl.hpp"

namespace py = pybind11;
using namespace scalefree;

namespace {

LearningRate rate(std::optional<double> eta) {
    return eta ? LearningRate::finite(*eta) : LearningRate::unbounded();
}

py::dict trace_dict(const SeedTrace& t) {
    py::dict d;
    d["seed"] = t.seed;
    d["actions"] = t.actions;
    d["learner"] = t.learner;
    d["comparator"] = t.comparator;
    d["regret"] = t.regret;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Scale-free bandit and episodic MDP learners";

    m.def("solve_tsallis", [](const std::vector<double>& L, std::optional<double> eta) { return solve_tsallis(L, rate(eta)); },
          py::arg("cumulative"), py::arg("eta") = py::none(),
          "1/2-Tsallis FTRL distribution; eta=None is the unbounded rate (uniform).");
    m.def("solve_shannon", [](const std::vector<double>& L, std::optional<double> eta) { return solve_shannon(L, rate(eta)); },
          py::arg("cumulative"), py::arg("eta") = py::none());

    m.def("clip", [](double loss, double threshold) { return clip(loss, ClipState{threshold, 1}); }, py::arg("loss"),
          py::arg("threshold"));
    m.def("next_threshold",
          [](double loss, double threshold) { return update_threshold(loss, ClipState{threshold, 1}).threshold; },
          py::arg("loss"), py::arg("threshold"));

    m.def("normalize_config", [](const std::string& text) { return config_to_json(parse_config(text)); },
          py::arg("config_json"), "Parse and validate a config; returns it with every default filled in.");
    m.def(
        "run_seed",
        [](const std::string& text, std::uint64_t seed) {
            const auto config = parse_config(text);
            py::gil_scoped_release release;
            SeedTrace t = config.setting == "mdp" ? run_mdp_seed(config, seed) : run_bandit_seed(config, seed);
            py::gil_scoped_acquire acquire;
            return trace_dict(t);
        },
        py::arg("config_json"), py::arg("seed"));
    m.def(
        "run_experiment",
        [](const std::string& text) {
            const auto config = parse_config(text);
            std::string summary;
            {
                py::gil_scoped_release release;
                summary = summary_to_json(run_experiment(config).summary);
            }
            return summary;
        },
        py::arg("config_json"), "Runs every seed; returns the summary as JSON text.");
    m.def(
        "max_reach_probabilities",
        [](const std::string& text) {
            const LayeredMdp mdp = build_mdp(parse_config(text));
            std::vector<double> out(mdp.structure().state_count());
            for (std::size_t s = 0; s < out.size(); ++s) out[s] = max_reach_probability(mdp, s);
            return out;
        },
        py::arg("config_json"));
}
