// Command-line front end for the experiment harness.
//
//   scalefree run-bandit --config bandit.json
//   scalefree run-mdp --layers 2,2 --actions 2 --horizon 20000 --seed-count 30
//   scalefree sweep --config bandit.json --parameter scale --values 1,1e6 --compare-actions
//   scalefree oracle --mdp instance.txt --losses losses.txt
//   scalefree summarize --checkpoints 1000,10000 results/run/trace_seed*.csv
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scalefree/errors.hpp"
#include "scalefree/experiment.hpp"
#include "scalefree/mdp_io.hpp"

using namespace scalefree;

namespace {

struct Overrides {
    std::string config;
    std::string name;
    std::string algorithm;
    std::string environment;
    std::vector<double> means;
    double scale = 0.0;
    std::optional<std::size_t> horizon;
    std::vector<std::uint64_t> seeds;
    std::size_t seed_count = 0;
    std::uint64_t first_seed = 1;
    std::vector<std::size_t> checkpoints;
    std::string output_dir;
    std::size_t workers = 0;
    // bandit
    double known_scale = 0.0;
    std::string threshold_rule;
    // mdp
    std::vector<std::size_t> layers;
    std::size_t actions = 0;
    std::string profile;
    std::uint64_t instance_seed = 0;
    bool instance_seed_set = false;
    std::string mdp_file;
    double xi = 0.0, beta = -1.0, gamma = -1.0, eta = 0.0, delta = 0.0, kappa = 0.0;
    bool early_stopping = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON experiment config");
    cmd->add_option("--name", o.name, "Run name (output subdirectory)");
    cmd->add_option("--algorithm", o.algorithm, "Algorithm tag");
    cmd->add_option("--environment", o.environment, "Environment name");
    cmd->add_option("--scale", o.scale, "Loss scale multiplier");
    cmd->add_option("--horizon", o.horizon, "Rounds / episodes");
    cmd->add_option("--seeds", o.seeds, "Explicit seed list")->delimiter(',');
    cmd->add_option("--seed-count", o.seed_count, "Use seeds first..first+count-1");
    cmd->add_option("--first-seed", o.first_seed, "First seed for --seed-count");
    cmd->add_option("--checkpoints", o.checkpoints, "Summary checkpoints")->delimiter(',');
    cmd->add_option("--output-dir", o.output_dir, "Output directory (SCALEFREE_OUTPUT_DIR overrides)");
    cmd->add_option("--workers", o.workers, "Parallel seed workers");
}

ExperimentConfig build_config(const Overrides& o, const std::string& setting) {
    ExperimentConfig c;
    if (!o.config.empty()) {
        c = load_config(o.config);
        if (c.setting != setting) throw ConfigError("config is for the " + c.setting + " setting", 0);
    } else {
        c.setting = setting;
        c.algorithm = setting == "mdp" ? "scb-rl" : "scb";
        if (setting == "mdp") c.mdp_environment.name = "stochastic-bernoulli";
    }
    if (!o.name.empty()) c.name = o.name;
    if (!o.algorithm.empty()) c.algorithm = o.algorithm;
    if (o.horizon) c.horizon = *o.horizon;
    if (!o.seeds.empty()) c.seeds = o.seeds;
    if (o.seed_count) {
        c.seeds.clear();
        for (std::size_t i = 0; i < o.seed_count; ++i) c.seeds.push_back(o.first_seed + i);
    }
    if (!o.checkpoints.empty()) c.checkpoints = o.checkpoints;
    if (!o.output_dir.empty()) c.output_dir = o.output_dir;
    if (o.workers) c.workers = o.workers;
    if (setting == "bandit") {
        if (!o.environment.empty()) c.bandit_environment.name = o.environment;
        if (!o.means.empty()) c.bandit_environment.means = o.means;
        if (o.scale > 0.0) c.bandit_environment.scale = o.scale;
        if (o.known_scale > 0.0) c.bandit.known_scale = o.known_scale;
        if (o.threshold_rule == "doubling") c.bandit.threshold_rule = ThresholdRule::doubling;
    } else {
        if (!o.environment.empty()) c.mdp_environment.name = o.environment;
        if (!o.means.empty()) c.mdp_environment.means = o.means;
        if (o.scale > 0.0) c.mdp_environment.scale = o.scale;
        if (!o.layers.empty()) c.mdp_instance.layers = o.layers;
        if (o.actions) c.mdp_instance.actions = o.actions;
        if (!o.profile.empty()) c.mdp_instance.profile = o.profile;
        if (o.instance_seed_set) c.instance_seed = o.instance_seed;
        if (!o.mdp_file.empty()) c.mdp_file = o.mdp_file;
        if (o.xi > 0.0) c.mdp.xi = o.xi;
        if (o.beta >= 0.0) c.mdp.beta = o.beta;
        if (o.gamma >= 0.0) c.mdp.gamma = o.gamma;
        if (o.eta > 0.0) c.mdp.eta = o.eta;
        if (o.delta > 0.0) c.mdp.delta = o.delta;
        if (o.kappa > 0.0) c.mdp.kappa = o.kappa;
        if (o.early_stopping) c.mdp.early_stopping = true;
    }
    if (const char* env = std::getenv("SCALEFREE_OUTPUT_DIR"); env && *env) c.output_dir = env;
    // round-trip through the parser so flag values get the same validation
    return parse_config(config_to_json(c));
}

int run(const ExperimentConfig& config) {
    const ExperimentResult result = run_experiment(config);
    std::cout << summary_to_json(result.summary);
    return 0;
}

void set_parameter(ExperimentConfig& c, const std::string& parameter, double value) {
    const bool mdp = c.setting == "mdp";
    if (parameter == "scale") {
        (mdp ? c.mdp_environment.scale : c.bandit_environment.scale) = value;
    } else if (parameter == "horizon") {
        c.horizon = static_cast<std::size_t>(value);
        c.checkpoints.clear();
    } else if (parameter == "known_scale" && !mdp) {
        c.bandit.known_scale = value;
    } else if (mdp && parameter == "xi") {
        c.mdp.xi = value;
    } else if (mdp && parameter == "beta") {
        c.mdp.beta = value;
    } else if (mdp && parameter == "gamma") {
        c.mdp.gamma = value;
    } else if (mdp && parameter == "eta") {
        c.mdp.eta = value;
    } else if (mdp && parameter == "kappa") {
        c.mdp.kappa = value;
    } else {
        throw ConfigError("parameter '" + parameter + "' cannot be swept in the " + c.setting + " setting", 0);
    }
}

int sweep(const std::string& config_path, const std::string& parameter, const std::vector<double>& values,
          bool compare_actions) {
    const ExperimentConfig base = load_config(config_path);
    if (values.empty()) throw ConfigError("--values must not be empty", 0);
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    std::vector<std::vector<SeedTrace>> all;
    for (double v : values) {
        ExperimentConfig c = base;
        set_parameter(c, parameter, v);
        c.name = base.name + "_" + parameter + "_" + format_double(v);
        if (const char* env = std::getenv("SCALEFREE_OUTPUT_DIR"); env && *env) c.output_dir = env;
        c = parse_config(config_to_json(c));
        ExperimentResult r = run_experiment(c);
        out.push_back({{"name", c.name}, {"value", v}, {"summary", nlohmann::ordered_json::parse(summary_to_json(r.summary))}});
        all.push_back(std::move(r.traces));
    }
    nlohmann::ordered_json doc;
    doc["parameter"] = parameter;
    doc["runs"] = out;
    if (compare_actions) {
        bool same = true;
        for (std::size_t i = 1; i < all.size(); ++i) {
            for (std::size_t s = 0; s < all[i].size(); ++s) same = same && all[i][s].actions == all[0][s].actions;
        }
        doc["identical_actions"] = same;
    }
    std::cout << doc.dump(2) << "\n";
    return 0;
}

int oracle(const std::string& mdp_path, const std::string& losses_path, const std::string& bandit_path) {
    nlohmann::ordered_json doc;
    if (!bandit_path.empty()) {
        std::ifstream in(bandit_path);
        if (!in) throw ConfigError("cannot open '" + bandit_path + "'", 0);
        std::vector<std::vector<double>> rows;
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (line.empty() || line[0] == '#') continue;
            std::vector<double> row;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) {
                char* end = nullptr;
                const double v = std::strtod(cell.c_str(), &end);
                if (end == cell.c_str()) throw ConfigError("not a number: '" + cell + "'", n);
                row.push_back(v);
            }
            rows.push_back(std::move(row));
        }
        const BestArm best = best_fixed_arm(rows);
        doc["arm"] = best.arm;
        doc["total_loss"] = best.total;
    } else {
        if (mdp_path.empty() || losses_path.empty()) throw ConfigError("oracle needs --mdp and --losses, or --bandit-losses", 0);
        std::ifstream min(mdp_path);
        if (!min) throw ConfigError("cannot open '" + mdp_path + "'", 0);
        const LayeredMdp mdp = read_mdp(min);
        std::ifstream lin(losses_path);
        if (!lin) throw ConfigError("cannot open '" + losses_path + "'", 0);
        std::size_t states = 0;
        std::size_t actions = 0;
        const std::vector<LossTable> episodes = read_losses(lin, &states, &actions);
        if (states != mdp.structure().state_count() || actions != mdp.structure().actions()) {
            throw ConfigError("loss file shape does not match the MDP", 0);
        }
        std::vector<double> sum(mdp.structure().pair_count(), 0.0);
        for (const LossTable& t : episodes) {
            for (std::size_t p = 0; p < sum.size(); ++p) sum[p] += t[p];
        }
        const HindsightOptimum best = best_occupancy_in_hindsight(mdp, sum);
        std::vector<std::size_t> choice;
        for (std::size_t s = 0; s < mdp.structure().state_count(); ++s) {
            const auto row = best.policy.row(s);
            choice.push_back(static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()));
        }
        doc["episodes"] = episodes.size();
        doc["value"] = best.value;
        doc["policy"] = choice;
        doc["occupancy"] = best.occupancy.pairs;
    }
    std::cout << doc.dump(2) << "\n";
    return 0;
}

int summarize_traces(const std::vector<std::string>& files, std::vector<std::size_t> checkpoints) {
    if (files.empty()) throw ConfigError("no trace files given", 0);
    std::vector<SeedTrace> traces;
    for (const std::string& f : files) {
        std::ifstream in(f);
        if (!in) throw ConfigError("cannot open '" + f + "'", 0);
        SeedTrace t;
        t.regret = read_trace_regret(in);
        const std::string stem = std::filesystem::path(f).stem().string();
        const std::size_t pos = stem.find("seed");
        if (pos != std::string::npos) t.seed = std::strtoull(stem.c_str() + pos + 4, nullptr, 10);
        traces.push_back(std::move(t));
    }
    const std::size_t horizon = traces.front().regret.size();
    for (const SeedTrace& t : traces) {
        if (t.regret.size() != horizon) throw ConfigError("traces have different lengths", 0);
    }
    if (checkpoints.empty()) {
        for (std::size_t p = 10; p <= horizon; p *= 10) checkpoints.push_back(p);
        checkpoints.push_back(horizon);
        std::sort(checkpoints.begin(), checkpoints.end());
        checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
    }
    for (std::size_t c : checkpoints) {
        if (c < 1 || c > horizon) throw ConfigError("checkpoint " + std::to_string(c) + " outside the traces", 0);
    }
    std::cout << summary_to_json(summarize(traces, checkpoints));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scale-free bandit and MDP experiment harness"};
    app.require_subcommand(1);

    Overrides bandit;
    auto* run_bandit = app.add_subcommand("run-bandit", "Run a bandit experiment");
    add_common(run_bandit, bandit);
    run_bandit->add_option("--means", bandit.means, "Arm means")->delimiter(',');
    run_bandit->add_option("--known-scale", bandit.known_scale, "Scale handed to known-scale baselines");
    run_bandit->add_option("--threshold-rule", bandit.threshold_rule, "scale-clip or doubling");

    Overrides mdp;
    auto* run_mdp = app.add_subcommand("run-mdp", "Run an MDP experiment");
    add_common(run_mdp, mdp);
    run_mdp->add_option("--means", mdp.means, "Per-pair loss means")->delimiter(',');
    run_mdp->add_option("--layers", mdp.layers, "States per layer")->delimiter(',');
    run_mdp->add_option("--actions", mdp.actions, "Actions per state");
    run_mdp->add_option("--profile", mdp.profile, "dense, sparse or unreachable");
    run_mdp->add_option("--instance-seed", mdp.instance_seed, "Seed of the random MDP")
        ->each([&mdp](const std::string&) { mdp.instance_seed_set = true; });
    run_mdp->add_option("--mdp-file", mdp.mdp_file, "Read the MDP from a file");
    run_mdp->add_option("--xi", mdp.xi, "Exploration fraction per state");
    run_mdp->add_option("--beta", mdp.beta, "Exploration mixing rate");
    run_mdp->add_option("--gamma", mdp.gamma, "Implicit exploration rate");
    run_mdp->add_option("--eta", mdp.eta, "Learning rate");
    run_mdp->add_option("--delta", mdp.delta, "Confidence parameter");
    run_mdp->add_option("--kappa", mdp.kappa, "Early stopping constant");
    run_mdp->add_flag("--early-stopping", mdp.early_stopping, "Use early-stopped exploration");

    std::string sweep_config;
    std::string sweep_parameter = "scale";
    std::vector<double> sweep_values;
    bool compare_actions = false;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run one config over several parameter values");
    sweep_cmd->add_option("--config", sweep_config, "JSON experiment config")->required();
    sweep_cmd->add_option("--parameter", sweep_parameter, "scale, horizon, known_scale, xi, beta, gamma, eta, kappa");
    sweep_cmd->add_option("--values", sweep_values, "Values to sweep")->delimiter(',')->required();
    sweep_cmd->add_flag("--compare-actions", compare_actions, "Report whether every run played the same actions");

    std::string oracle_mdp;
    std::string oracle_losses;
    std::string oracle_bandit;
    auto* oracle_cmd = app.add_subcommand("oracle", "Best fixed arm or policy in hindsight");
    oracle_cmd->add_option("--mdp", oracle_mdp, "MDP instance file");
    oracle_cmd->add_option("--losses", oracle_losses, "Per-episode loss file");
    oracle_cmd->add_option("--bandit-losses", oracle_bandit, "CSV with one loss vector per line");

    std::vector<std::string> trace_files;
    std::vector<std::size_t> summary_checkpoints;
    auto* summarize_cmd = app.add_subcommand("summarize", "Summarize trace CSV files");
    summarize_cmd->add_option("traces", trace_files, "Trace files")->required();
    summarize_cmd->add_option("--checkpoints", summary_checkpoints, "Checkpoints")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run_bandit) return run(build_config(bandit, "bandit"));
        if (*run_mdp) return run(build_config(mdp, "mdp"));
        if (*sweep_cmd) return sweep(sweep_config, sweep_parameter, sweep_values, compare_actions);
        if (*oracle_cmd) return oracle(oracle_mdp, oracle_losses, oracle_bandit);
        if (*summarize_cmd) return summarize_traces(trace_files, summary_checkpoints);
    } catch (const InvalidInput& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
