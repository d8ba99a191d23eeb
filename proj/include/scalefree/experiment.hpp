#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scalefree/bandit.hpp"
#include "scalefree/environments.hpp"
#include "scalefree/scb_rl.hpp"

namespace scalefree {

inline constexpr int kConfigSchemaVersion = 1;

struct ExperimentConfig {
    int schema_version = kConfigSchemaVersion;
    std::string name = "experiment";
    std::string setting = "bandit";  // bandit | mdp
    std::string algorithm = "scb";   // scb, scb-ix, exp3-ix, tsallis-inf | scb-rl
    BanditOptions bandit;
    ScbRlOptions mdp;
    BanditEnvironmentSpec bandit_environment;
    MdpLossSpec mdp_environment;
    MdpInstanceSpec mdp_instance;
    std::uint64_t instance_seed = 0;
    std::string mdp_file;  // read the MDP from a file instead of generating it
    std::size_t horizon = 1000;
    std::vector<std::uint64_t> seeds{1};
    std::vector<std::size_t> checkpoints;  // empty: powers of ten up to the horizon, plus the horizon
    std::string output_dir;                // empty: nothing written
    std::size_t workers = 1;
};

// Parses the JSON config. Unknown keys, wrong types and out-of-range values
// raise ConfigError with the line of the offending key when it can be found.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);

// Resolved checkpoints (sorted, unique, within [1, horizon]).
std::vector<std::size_t> resolve_checkpoints(const ExperimentConfig& config);

struct SeedTrace {
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> actions;  // arm index, or trajectory hash for MDPs
    std::vector<double> learner;         // cumulative learner loss
    std::vector<double> comparator;      // cumulative loss of the best fixed arm / policy on the prefix
    std::vector<double> regret;          // learner - comparator
};

struct Summary {
    std::string setting;
    std::string algorithm;
    std::string environment;
    std::size_t horizon = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<std::size_t> checkpoints;
    std::vector<double> mean;
    std::vector<double> median;
    std::vector<double> p25;
    std::vector<double> p75;
    std::vector<double> p95;
    std::vector<double> final_regret;  // per seed
    std::optional<double> slope;       // log-log fit of mean regret against t
};

struct ExperimentResult {
    std::vector<SeedTrace> traces;  // in seed order
    Summary summary;
};

// Runs every seed (across `workers` threads). When output_dir is set, writes
// <output_dir>/<name>/trace_seed<seed>.csv row by row and summary.json.
ExperimentResult run_experiment(const ExperimentConfig& config);

SeedTrace run_bandit_seed(const ExperimentConfig& config, std::uint64_t seed, std::ostream* csv = nullptr);
SeedTrace run_mdp_seed(const ExperimentConfig& config, std::uint64_t seed, std::ostream* csv = nullptr);

// Least-squares slope of log y against log x over points with x, y > 0;
// empty with fewer than two such points.
std::optional<double> fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Linear-interpolation quantile of an unsorted sample.
double quantile(std::vector<double> values, double q);

Summary summarize(const std::vector<SeedTrace>& traces, const std::vector<std::size_t>& checkpoints);
std::string summary_to_json(const Summary& summary);

// Reads the cumulative_regret column of a trace file.
std::vector<double> read_trace_regret(std::istream& in);

// 64-bit FNV-1a over the (state, action) sequence.
std::uint64_t trajectory_hash(const std::vector<std::size_t>& states, const std::vector<std::size_t>& actions);

// 17 significant digits (%.17g); parses back to the same double.
std::string format_double(double value);

LayeredMdp build_mdp(const ExperimentConfig& config);

}  // namespace scalefree
