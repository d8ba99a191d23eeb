#include "scalefree/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "scalefree/errors.hpp"
#include "scalefree/mdp_io.hpp"

namespace scalefree {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

class ConfigReader {
public:
    explicit ConfigReader(std::string_view text) : text_(text) {}

    std::size_t line_of(const std::string& key) const {
        const std::string quoted = "\"" + key + "\"";
        const std::size_t pos = text_.find(quoted);
        if (pos == std::string_view::npos) return 0;
        return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
    }

    std::size_t line_at_byte(std::size_t byte) const {
        const std::size_t end = std::min(byte, text_.size());
        return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
    }

    [[noreturn]] void fail(const std::string& message, const std::string& key) const {
        throw ConfigError(message, line_of(key));
    }

    void only(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) const {
        if (!obj.is_object()) fail(where + " must be an object", where);
        for (const auto& item : obj.items()) {
            bool known = false;
            for (const char* a : allowed) known = known || item.key() == a;
            if (!known) fail("unknown key '" + item.key() + "' in " + where, item.key());
        }
    }

    void require(const json& obj, const char* key, const std::string& where) const {
        if (!obj.contains(key)) throw ConfigError("missing required key '" + std::string(key) + "' in " + where, 0);
    }

    double number(const json& obj, const char* key, double fallback) const {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_number()) fail("'" + std::string(key) + "' must be a number", key);
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail("'" + std::string(key) + "' must be finite", key);
        return d;
    }

    std::optional<double> maybe_number(const json& obj, const char* key) const {
        if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
        return number(obj, key, 0.0);
    }

    std::uint64_t integer(const json& obj, const char* key, std::uint64_t fallback) const {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            fail("'" + std::string(key) + "' must be a non-negative integer", key);
        }
        return v.get<std::uint64_t>();
    }

    bool boolean(const json& obj, const char* key, bool fallback) const {
        if (!obj.contains(key)) return fallback;
        if (!obj.at(key).is_boolean()) fail("'" + std::string(key) + "' must be true or false", key);
        return obj.at(key).get<bool>();
    }

    std::string string(const json& obj, const char* key, const std::string& fallback) const {
        if (!obj.contains(key)) return fallback;
        if (!obj.at(key).is_string()) fail("'" + std::string(key) + "' must be a string", key);
        return obj.at(key).get<std::string>();
    }

    std::vector<double> numbers(const json& obj, const char* key, std::vector<double> fallback) const {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_array()) fail("'" + std::string(key) + "' must be an array of numbers", key);
        std::vector<double> out;
        for (const json& x : v) {
            if (!x.is_number()) fail("'" + std::string(key) + "' must be an array of numbers", key);
            out.push_back(x.get<double>());
        }
        return out;
    }

    std::vector<std::uint64_t> integers(const json& obj, const char* key) const {
        const json& v = obj.at(key);
        if (!v.is_array()) fail("'" + std::string(key) + "' must be an array of integers", key);
        std::vector<std::uint64_t> out;
        for (const json& x : v) {
            if (!x.is_number_unsigned() && !(x.is_number_integer() && x.get<std::int64_t>() >= 0)) {
                fail("'" + std::string(key) + "' must be an array of non-negative integers", key);
            }
            out.push_back(x.get<std::uint64_t>());
        }
        return out;
    }

    std::vector<ScaleJump> jumps(const json& obj) const {
        std::vector<ScaleJump> out;
        if (!obj.contains("jumps")) return out;
        if (!obj.at("jumps").is_array()) fail("'jumps' must be an array", "jumps");
        for (const json& j : obj.at("jumps")) {
            only(j, {"at", "factor"}, "jumps");
            require(j, "at", "jumps");
            require(j, "factor", "jumps");
            out.push_back({static_cast<std::size_t>(integer(j, "at", 0)), number(j, "factor", 1.0)});
        }
        return out;
    }

private:
    std::string_view text_;
};

template <class F>
void wrap_invalid(const ConfigReader& reader, const std::string& key, F&& body) {
    try {
        body();
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidInput& e) {
        reader.fail(e.what(), key);
    }
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
    ConfigReader reader(text);
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what(), reader.line_at_byte(e.byte));
    }
    reader.only(root,
                {"schema_version", "name", "setting", "algorithm", "parameters", "environment", "mdp", "horizon",
                 "seeds", "checkpoints", "output_dir", "workers"},
                "config");
    for (const char* key : {"schema_version", "setting", "algorithm", "environment", "horizon", "seeds"}) {
        reader.require(root, key, "config");
    }

    ExperimentConfig c;
    c.schema_version = static_cast<int>(reader.integer(root, "schema_version", 0));
    if (c.schema_version != kConfigSchemaVersion) {
        reader.fail("unsupported schema_version " + std::to_string(c.schema_version) + " (expected " +
                        std::to_string(kConfigSchemaVersion) + ")",
                    "schema_version");
    }
    c.name = reader.string(root, "name", c.name);
    if (c.name.empty() || c.name.find('/') != std::string::npos) reader.fail("'name' must be a plain file name", "name");
    c.setting = reader.string(root, "setting", c.setting);
    c.algorithm = reader.string(root, "algorithm", c.algorithm);
    c.horizon = static_cast<std::size_t>(reader.integer(root, "horizon", 0));
    if (c.horizon < 1) reader.fail("'horizon' must be at least 1", "horizon");
    c.output_dir = reader.string(root, "output_dir", "");
    c.workers = static_cast<std::size_t>(reader.integer(root, "workers", 1));
    if (c.workers < 1) reader.fail("'workers' must be at least 1", "workers");

    const json& seeds = root.at("seeds");
    if (seeds.is_object()) {
        reader.only(seeds, {"first", "count"}, "seeds");
        const std::uint64_t first = reader.integer(seeds, "first", 1);
        const std::uint64_t count = reader.integer(seeds, "count", 1);
        c.seeds.clear();
        for (std::uint64_t i = 0; i < count; ++i) c.seeds.push_back(first + i);
    } else {
        c.seeds = reader.integers(root, "seeds");
    }
    if (c.seeds.empty()) reader.fail("'seeds' must not be empty", "seeds");
    {
        std::vector<std::uint64_t> sorted = c.seeds;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) reader.fail("duplicate seed", "seeds");
    }
    if (root.contains("checkpoints")) {
        for (std::uint64_t v : reader.integers(root, "checkpoints")) {
            if (v < 1 || v > c.horizon) reader.fail("checkpoints must lie in [1, horizon]", "checkpoints");
            c.checkpoints.push_back(static_cast<std::size_t>(v));
        }
    }

    const json empty = json::object();
    const json& params = root.contains("parameters") ? root.at("parameters") : empty;
    const json& env = root.at("environment");

    if (c.setting == "bandit") {
        if (root.contains("mdp")) reader.fail("'mdp' is only valid for the mdp setting", "mdp");
        wrap_invalid(reader, "algorithm", [&] { parse_bandit_algorithm(c.algorithm); });
        reader.only(params, {"known_scale", "threshold_rule", "initial_threshold"}, "parameters");
        c.bandit.known_scale = reader.number(params, "known_scale", c.bandit.known_scale);
        const std::string rule = reader.string(params, "threshold_rule", "scale-clip");
        if (rule == "scale-clip") {
            c.bandit.threshold_rule = ThresholdRule::scale_clip;
        } else if (rule == "doubling") {
            c.bandit.threshold_rule = ThresholdRule::doubling;
        } else {
            reader.fail("unknown threshold_rule '" + rule + "'", "threshold_rule");
        }
        c.bandit.initial_threshold = reader.number(params, "initial_threshold", 0.0);

        reader.only(env, {"name", "means", "scale", "sigma", "jumps", "tail_index", "cap", "window"}, "environment");
        auto& e = c.bandit_environment;
        e.name = reader.string(env, "name", e.name);
        e.means = reader.numbers(env, "means", e.means);
        e.scale = reader.number(env, "scale", e.scale);
        e.sigma = reader.number(env, "sigma", e.sigma);
        e.jumps = reader.jumps(env);
        e.tail_index = reader.number(env, "tail_index", e.tail_index);
        e.cap = reader.number(env, "cap", e.cap);
        e.window = static_cast<std::size_t>(reader.integer(env, "window", 0));
        wrap_invalid(reader, "environment", [&] { make_bandit_environment(e, 0); });
        wrap_invalid(reader, "parameters", [&] { make_bandit_state(parse_bandit_algorithm(c.algorithm), e.means.size(), 0, c.bandit); });
    } else if (c.setting == "mdp") {
        if (c.algorithm != "scb-rl") reader.fail("unknown MDP algorithm '" + c.algorithm + "'", "algorithm");
        reader.only(params,
                    {"xi", "beta", "gamma", "eta", "delta", "early_stopping", "kappa", "variance_bonus",
                     "count_bonus"},
                    "parameters");
        c.mdp.xi = reader.maybe_number(params, "xi");
        c.mdp.beta = reader.maybe_number(params, "beta");
        c.mdp.gamma = reader.maybe_number(params, "gamma");
        c.mdp.eta = reader.maybe_number(params, "eta");
        c.mdp.delta = reader.number(params, "delta", c.mdp.delta);
        c.mdp.early_stopping = reader.boolean(params, "early_stopping", false);
        c.mdp.kappa = reader.number(params, "kappa", c.mdp.kappa);
        c.mdp.explorer.variance_bonus = reader.number(params, "variance_bonus", 1.0);
        c.mdp.explorer.count_bonus = reader.number(params, "count_bonus", 1.0);

        reader.only(env, {"name", "means", "scale", "sigma", "jumps"}, "environment");
        auto& e = c.mdp_environment;
        e.name = reader.string(env, "name", e.name);
        e.means = reader.numbers(env, "means", {});
        e.scale = reader.number(env, "scale", e.scale);
        e.sigma = reader.number(env, "sigma", e.sigma);
        e.jumps = reader.jumps(env);

        if (root.contains("mdp")) {
            const json& m = root.at("mdp");
            reader.only(m, {"layers", "actions", "profile", "concentration", "support", "instance_seed", "file"},
                        "mdp");
            if (m.contains("layers")) {
                c.mdp_instance.layers.clear();
                for (std::uint64_t v : reader.integers(m, "layers")) c.mdp_instance.layers.push_back(v);
            }
            c.mdp_instance.actions = static_cast<std::size_t>(reader.integer(m, "actions", c.mdp_instance.actions));
            c.mdp_instance.profile = reader.string(m, "profile", c.mdp_instance.profile);
            c.mdp_instance.concentration = reader.number(m, "concentration", c.mdp_instance.concentration);
            c.mdp_instance.support = static_cast<std::size_t>(reader.integer(m, "support", c.mdp_instance.support));
            c.instance_seed = reader.integer(m, "instance_seed", 0);
            c.mdp_file = reader.string(m, "file", "");
        }
        LayeredStructure structure;
        wrap_invalid(reader, "mdp", [&] { structure = build_mdp(c).structure(); });
        wrap_invalid(reader, "environment", [&] { make_mdp_environment(e, structure, c.instance_seed, 0); });
        wrap_invalid(reader, "parameters", [&] { resolve_scb_rl_parameters(structure, c.horizon, c.mdp); });
    } else {
        reader.fail("'setting' must be \"bandit\" or \"mdp\"", "setting");
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'", 0);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string config_to_json(const ExperimentConfig& c) {
    ordered_json root;
    root["schema_version"] = c.schema_version;
    root["name"] = c.name;
    root["setting"] = c.setting;
    root["algorithm"] = c.algorithm;
    auto jumps = [](const std::vector<ScaleJump>& js) {
        ordered_json arr = ordered_json::array();
        for (const ScaleJump& j : js) arr.push_back({{"at", j.at}, {"factor", j.factor}});
        return arr;
    };
    if (c.setting == "bandit") {
        root["parameters"] = {{"known_scale", c.bandit.known_scale},
                              {"threshold_rule",
                               c.bandit.threshold_rule == ThresholdRule::doubling ? "doubling" : "scale-clip"},
                              {"initial_threshold", c.bandit.initial_threshold}};
        const auto& e = c.bandit_environment;
        root["environment"] = {{"name", e.name},         {"means", e.means},   {"scale", e.scale},
                               {"sigma", e.sigma},       {"jumps", jumps(e.jumps)}, {"tail_index", e.tail_index},
                               {"cap", e.cap},           {"window", e.window}};
    } else {
        ordered_json p;
        auto opt = [&](const char* key, const std::optional<double>& v) {
            if (v) p[key] = *v;
            else p[key] = nullptr;
        };
        opt("xi", c.mdp.xi);
        opt("beta", c.mdp.beta);
        opt("gamma", c.mdp.gamma);
        opt("eta", c.mdp.eta);
        p["delta"] = c.mdp.delta;
        p["early_stopping"] = c.mdp.early_stopping;
        p["kappa"] = c.mdp.kappa;
        p["variance_bonus"] = c.mdp.explorer.variance_bonus;
        p["count_bonus"] = c.mdp.explorer.count_bonus;
        root["parameters"] = p;
        const auto& e = c.mdp_environment;
        root["environment"] = {{"name", e.name}, {"means", e.means}, {"scale", e.scale}, {"sigma", e.sigma},
                               {"jumps", jumps(e.jumps)}};
        ordered_json m;
        m["layers"] = c.mdp_instance.layers;
        m["actions"] = c.mdp_instance.actions;
        m["profile"] = c.mdp_instance.profile;
        m["concentration"] = c.mdp_instance.concentration;
        m["support"] = c.mdp_instance.support;
        m["instance_seed"] = c.instance_seed;
        if (!c.mdp_file.empty()) m["file"] = c.mdp_file;
        root["mdp"] = m;
    }
    root["horizon"] = c.horizon;
    root["seeds"] = c.seeds;
    root["checkpoints"] = c.checkpoints;
    root["output_dir"] = c.output_dir;
    root["workers"] = c.workers;
    return root.dump(2) + "\n";
}

std::vector<std::size_t> resolve_checkpoints(const ExperimentConfig& config) {
    std::vector<std::size_t> out = config.checkpoints;
    if (out.empty()) {
        for (std::size_t p = 10; p <= config.horizon; p *= 10) out.push_back(p);
        out.push_back(config.horizon);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::uint64_t trajectory_hash(const std::vector<std::size_t>& states, const std::vector<std::size_t>& actions) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xffU;
            h *= 1099511628211ULL;
        }
    };
    for (std::size_t i = 0; i < states.size(); ++i) {
        mix(states[i]);
        mix(actions[i]);
    }
    return h;
}

LayeredMdp build_mdp(const ExperimentConfig& config) {
    if (!config.mdp_file.empty()) {
        std::ifstream in(config.mdp_file);
        if (!in) throw InvalidInput("cannot open MDP file '" + config.mdp_file + "'");
        return read_mdp(in);
    }
    return make_random_mdp(config.mdp_instance, config.instance_seed);
}

namespace {

class CapturingAdversary final : public Adversary {
public:
    explicit CapturingAdversary(Adversary& inner) : inner_(inner) {}
    std::size_t arms() const override { return inner_.arms(); }
    std::vector<double> losses(std::size_t round, std::span<const std::size_t> history) override {
        last = inner_.losses(round, history);
        return last;
    }
    std::vector<double> last;

private:
    Adversary& inner_;
};

}  // namespace

SeedTrace run_bandit_seed(const ExperimentConfig& config, std::uint64_t seed, std::ostream* csv) {
    auto env = make_bandit_environment(config.bandit_environment, seed);
    CapturingAdversary adversary(*env);
    BanditAlgState state =
        make_bandit_state(parse_bandit_algorithm(config.algorithm), env->arms(), seed, config.bandit);
    SeedTrace trace;
    trace.seed = seed;
    trace.actions.reserve(config.horizon);
    trace.learner.reserve(config.horizon);
    trace.comparator.reserve(config.horizon);
    trace.regret.reserve(config.horizon);
    std::vector<double> sums(env->arms(), 0.0);
    double learner = 0.0;
    if (csv) *csv << "t,arm,loss,learner_loss,comparator_loss,cumulative_regret,C_t\n";
    for (std::size_t t = 1; t <= config.horizon; ++t) {
        const RoundRecord rec = bandit_round(state, adversary);
        learner += rec.loss;
        for (std::size_t k = 0; k < sums.size(); ++k) sums[k] += adversary.last[k];
        const double comparator = *std::min_element(sums.begin(), sums.end());
        const double regret = learner - comparator;
        trace.actions.push_back(rec.arm);
        trace.learner.push_back(learner);
        trace.comparator.push_back(comparator);
        trace.regret.push_back(regret);
        if (csv) {
            *csv << t << ',' << rec.arm << ',' << format_double(rec.loss) << ',' << format_double(learner) << ','
                 << format_double(comparator) << ',' << format_double(regret) << ','
                 << format_double(rec.threshold_before) << '\n';
        }
    }
    return trace;
}

SeedTrace run_mdp_seed(const ExperimentConfig& config, std::uint64_t seed, std::ostream* csv) {
    const LayeredMdp mdp = build_mdp(config);
    const LayeredStructure& st = mdp.structure();
    auto adversary = make_mdp_environment(config.mdp_environment, st, config.instance_seed, seed);
    MdpSimulator simulator(mdp, RandomStream(seed, StreamKey::environment));
    SeedTrace trace;
    trace.seed = seed;
    std::vector<double> sums(st.pair_count(), 0.0);
    double learner = 0.0;
    if (csv) {
        *csv << "t,phase,trajectory,loss,learner_loss,comparator_loss,cumulative_regret";
        for (std::size_t h = 0; h < st.horizon(); ++h) *csv << ",C_" << h;
        *csv << '\n';
    }
    auto observe = [&](const EpisodeRecord& rec, const LossTable& table) {
        for (std::size_t p = 0; p < sums.size(); ++p) sums[p] += table[p];
        learner += rec.episode_loss;
        const double comparator = best_occupancy_in_hindsight(mdp, sums).value;
        const double regret = learner - comparator;
        const std::uint64_t hash = trajectory_hash(rec.states, rec.actions);
        trace.actions.push_back(hash);
        trace.learner.push_back(learner);
        trace.comparator.push_back(comparator);
        trace.regret.push_back(regret);
        if (csv) {
            char hex[20];
            std::snprintf(hex, sizeof hex, "%016" PRIx64, hash);
            *csv << rec.episode << ',' << rec.phase << ',' << hex << ',' << format_double(rec.episode_loss) << ','
                 << format_double(learner) << ',' << format_double(comparator) << ',' << format_double(regret);
            for (double c : rec.thresholds_before) *csv << ',' << format_double(c);
            *csv << '\n';
        }
    };
    scb_rl_run(simulator, *adversary, config.horizon, seed, config.mdp, observe);
    return trace;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidInput("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::optional<double> fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    if (lx.size() < 2) return std::nullopt;
    const double n = static_cast<double>(lx.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) return std::nullopt;
    return sxy / sxx;
}

Summary summarize(const std::vector<SeedTrace>& traces, const std::vector<std::size_t>& checkpoints) {
    Summary s;
    s.checkpoints = checkpoints;
    for (const SeedTrace& t : traces) {
        s.seeds.push_back(t.seed);
        s.final_regret.push_back(t.regret.empty() ? 0.0 : t.regret.back());
    }
    std::vector<double> xs;
    for (std::size_t c : checkpoints) {
        std::vector<double> vals;
        for (const SeedTrace& t : traces) {
            if (c < 1 || c > t.regret.size()) throw InvalidInput("checkpoint beyond the trace length");
            vals.push_back(t.regret[c - 1]);
        }
        if (vals.empty()) throw InvalidInput("no traces to summarize");
        s.mean.push_back(std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size()));
        s.median.push_back(quantile(vals, 0.5));
        s.p25.push_back(quantile(vals, 0.25));
        s.p75.push_back(quantile(vals, 0.75));
        s.p95.push_back(quantile(vals, 0.95));
        xs.push_back(static_cast<double>(c));
    }
    s.slope = fit_loglog_slope(xs, s.mean);
    if (!traces.empty()) s.horizon = traces.front().regret.size();
    return s;
}

std::string summary_to_json(const Summary& s) {
    ordered_json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["setting"] = s.setting;
    j["algorithm"] = s.algorithm;
    j["environment"] = s.environment;
    j["horizon"] = s.horizon;
    j["seeds"] = s.seeds;
    j["checkpoints"] = s.checkpoints;
    j["mean_regret"] = s.mean;
    j["median_regret"] = s.median;
    j["p25_regret"] = s.p25;
    j["p75_regret"] = s.p75;
    j["p95_regret"] = s.p95;
    j["final_regret"] = s.final_regret;
    if (s.slope) j["loglog_slope"] = *s.slope;
    else j["loglog_slope"] = nullptr;
    return j.dump(2) + "\n";
}

std::vector<double> read_trace_regret(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("empty trace file");
    std::size_t column = std::numeric_limits<std::size_t>::max();
    {
        std::stringstream header(line);
        std::string name;
        for (std::size_t i = 0; std::getline(header, name, ','); ++i) {
            if (name == "cumulative_regret") column = i;
        }
    }
    if (column == std::numeric_limits<std::size_t>::max()) throw InvalidInput("trace has no cumulative_regret column");
    std::vector<double> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream fields(line);
        std::string cell;
        std::size_t i = 0;
        bool found = false;
        while (std::getline(fields, cell, ',')) {
            if (i++ == column) {
                char* end = nullptr;
                const double v = std::strtod(cell.c_str(), &end);
                if (end == cell.c_str() || *end != '\0') {
                    throw InvalidInput("bad number on trace row " + std::to_string(row));
                }
                out.push_back(v);
                found = true;
                break;
            }
        }
        if (!found) throw InvalidInput("short trace row " + std::to_string(row));
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    const std::vector<std::size_t> checkpoints = resolve_checkpoints(config);
    std::filesystem::path dir;
    if (!config.output_dir.empty()) {
        dir = std::filesystem::path(config.output_dir) / config.name;
        std::filesystem::create_directories(dir);
        std::ofstream(dir / "config.json") << config_to_json(config);
    }

    ExperimentResult result;
    result.traces.resize(config.seeds.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= config.seeds.size()) return;
            try {
                const std::uint64_t seed = config.seeds[i];
                std::ofstream file;
                std::ostream* csv = nullptr;
                if (!dir.empty()) {
                    file.open(dir / ("trace_seed" + std::to_string(seed) + ".csv"));
                    if (!file) throw EnvironmentError("cannot write trace for seed " + std::to_string(seed));
                    csv = &file;
                }
                result.traces[i] = config.setting == "mdp" ? run_mdp_seed(config, seed, csv)
                                                           : run_bandit_seed(config, seed, csv);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = config.seeds.size();
                return;
            }
        }
    };
    const std::size_t threads = std::min(config.workers, config.seeds.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    result.summary = summarize(result.traces, checkpoints);
    result.summary.setting = config.setting;
    result.summary.algorithm = config.algorithm;
    result.summary.environment =
        config.setting == "mdp" ? config.mdp_environment.name : config.bandit_environment.name;
    if (!dir.empty()) std::ofstream(dir / "summary.json") << summary_to_json(result.summary);
    return result;
}

}  // namespace scalefree
