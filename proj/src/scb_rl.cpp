#include "scalefree/scb_rl.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scalefree/errors.hpp"

namespace scalefree {

double LayerClipState::clip(std::size_t layer, double loss) const {
    const double c = thresholds[layer];
    return std::max(-c, std::min(c, loss));
}

void LayerClipState::update(std::size_t layer, double loss) {
    if (std::abs(loss) > thresholds[layer]) thresholds[layer] = 2.0 * std::abs(loss);
}

MixturePolicy mix_exploration(const Policy& ftrl_policy, const std::vector<MixturePolicy>& exploration,
                              double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidInput("exploration rate must lie in [0, 1]");
    MixturePolicy mixture;
    if (beta < 1.0) {
        mixture.members.push_back(ftrl_policy);
        mixture.weights.push_back(1.0 - beta);
    }
    if (beta > 0.0) {
        if (exploration.empty()) throw InvalidInput("exploration mixing needs exploration policies");
        const double share = beta / static_cast<double>(exploration.size());
        for (const MixturePolicy& e : exploration) {
            for (std::size_t j = 0; j < e.members.size(); ++j) {
                mixture.members.push_back(e.members[j]);
                mixture.weights.push_back(share * e.weights[j]);
            }
        }
    }
    return mixture;
}

double mixture_upper_occupancy(const MixturePolicy& mixture, std::size_t state, std::size_t action,
                               const ConfidenceSet& set) {
    double total = 0.0;
    for (std::size_t j = 0; j < mixture.members.size(); ++j) {
        const double w = mixture.weights[j] * mixture.members[j](state, action);
        if (w > 0.0) total += w * comp_uob(mixture.members[j], state, set);
    }
    return total;
}

UobRepsExState make_uob_reps_ex(const LayeredStructure& structure, const UobRepsParameters& params,
                                double log_term, std::vector<MixturePolicy> exploration) {
    if (!(params.eta > 0.0) || !std::isfinite(params.eta)) throw InvalidInput("eta must be positive");
    if (!(params.gamma >= 0.0) || !std::isfinite(params.gamma)) throw InvalidInput("gamma must be non-negative");
    if (params.beta > 0.0 && exploration.size() != structure.state_count()) {
        throw InvalidInput("one exploration policy per state is required");
    }
    UobRepsExState state;
    state.structure = structure;
    state.params = params;
    state.confidence = ConfidenceSet(structure, log_term);
    state.cumulative.assign(structure.pair_count(), 0.0);
    state.exploration = std::move(exploration);
    state.ftrl_policy = Policy::uniform(structure);
    state.ftrl_occupancy = occupancy_of_policy(structure, uniform_kernel(structure), state.ftrl_policy);
    state.played = mix_exploration(state.ftrl_policy, state.exploration, params.beta);
    return state;
}

namespace {

// beta / S * sum over exploration members, for every action of `s`.
void fill_exploration_reach(UobRepsExState& state, std::size_t s) {
    const auto& st = state.structure;
    if (state.cached_epoch != state.confidence.epoch()) {
        state.cached_epoch = state.confidence.epoch();
        state.exploration_reach_cache.assign(st.pair_count(), 0.0);
        state.exploration_reach_known.assign(st.state_count(), 0);
    }
    if (state.exploration_reach_known[s]) return;
    const double share = state.params.beta / static_cast<double>(state.exploration.size());
    for (const MixturePolicy& e : state.exploration) {
        for (std::size_t j = 0; j < e.members.size(); ++j) {
            bool acts = false;
            for (std::size_t a = 0; a < st.actions(); ++a) acts = acts || e.members[j](s, a) > 0.0;
            if (!acts) continue;
            const double reach = comp_uob(e.members[j], s, state.confidence);
            for (std::size_t a = 0; a < st.actions(); ++a) {
                state.exploration_reach_cache[st.pair_index(s, a)] += share * e.weights[j] * e.members[j](s, a) * reach;
            }
        }
    }
    state.exploration_reach_known[s] = 1;
}

}  // namespace

UobRepsRoundInfo uob_reps_ex_round(UobRepsExState& state, const EpisodePath& path,
                                   std::span<const double> offset_losses, std::span<const double> thresholds) {
    const auto& st = state.structure;
    const std::size_t H = st.horizon();
    if (path.states.size() != H || path.actions.size() != H || offset_losses.size() != H ||
        thresholds.size() != H) {
        throw InvalidInput("episode data does not match the horizon");
    }
    UobRepsRoundInfo info;
    info.upper.resize(H);
    info.estimates.resize(H);
    const double beta = state.params.beta;
    for (std::size_t h = 0; h < H; ++h) {
        const std::size_t s = path.states[h];
        const std::size_t a = path.actions[h];
        double u = 0.0;
        if (beta < 1.0) {
            const double w = (1.0 - beta) * state.ftrl_policy(s, a);
            if (w > 0.0) u += w * comp_uob(state.ftrl_policy, s, state.confidence);
        }
        if (beta > 0.0) {
            fill_exploration_reach(state, s);
            u += state.exploration_reach_cache[st.pair_index(s, a)];
        }
        info.upper[h] = u;
        const double plus = offset_losses[h];
        if (!(plus >= 0.0) || !std::isfinite(plus)) throw InvalidInput("offset losses must be finite and non-negative");
        double estimate = 0.0;
        if (plus > 0.0) {
            const double denom = u + state.params.gamma;
            if (!(denom > 0.0)) throw NumericalError("zero upper occupancy with gamma = 0 at a visited pair");
            estimate = plus / denom;
        }
        info.estimates[h] = estimate;
        state.cumulative[st.pair_index(s, a)] += estimate;
    }

    info.epoch_advanced = state.confidence.update(path);

    state.ftrl_occupancy =
        occupancy_ftrl_step(state.cumulative, state.confidence, thresholds, state.params.eta, state.solver);
    state.ftrl_policy = policy_of_occupancy(st, state.ftrl_occupancy);
    state.played = mix_exploration(state.ftrl_policy, state.exploration, beta);
    return info;
}

ScbRlParameters resolve_scb_rl_parameters(const LayeredStructure& structure, std::size_t episodes,
                                          const ScbRlOptions& options) {
    if (episodes < 2) throw InvalidInput("SCB-RL needs at least two episodes");
    if (!(options.delta > 0.0 && options.delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
    const double S = static_cast<double>(structure.state_count());
    const double A = static_cast<double>(structure.actions());
    const double H = static_cast<double>(structure.horizon());
    const double T = static_cast<double>(episodes);
    ScbRlParameters p;
    p.delta = options.delta;
    p.log_term = std::log(T * S * A / options.delta);
    const double rate = std::sqrt(S * A / T);
    const double step = std::sqrt(H * p.log_term / (S * A * T));
    p.xi = options.xi.value_or(rate);
    p.beta = options.beta.value_or(std::min(1.0, rate));
    p.eta = options.eta.value_or(step);
    p.gamma = options.gamma.value_or(step);
    if (!(p.xi > 0.0) || !std::isfinite(p.xi)) throw InvalidInput("xi must be positive");
    if (!(p.beta >= 0.0 && p.beta <= 1.0)) throw InvalidInput("beta must lie in [0, 1]");
    if (!(p.eta > 0.0) || !std::isfinite(p.eta)) throw InvalidInput("eta must be positive");
    if (!(p.gamma >= 0.0) || !std::isfinite(p.gamma)) throw InvalidInput("gamma must be non-negative");
    if (!(options.kappa > 0.0)) throw InvalidInput("kappa must be positive");
    p.explore_episodes = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(p.xi * T)));
    if (p.explore_episodes * structure.state_count() >= episodes) {
        throw InvalidInput("exploration phase (" + std::to_string(p.explore_episodes * structure.state_count()) +
                           " episodes) does not fit in " + std::to_string(episodes) + " episodes");
    }
    return p;
}

namespace {

LossTable checked_table(MdpAdversary& adversary, std::size_t episode, std::span<const EpisodePath> history,
                        const LayeredStructure& structure) {
    LossTable table = adversary.losses(episode, history);
    if (table.size() != structure.pair_count()) {
        throw EnvironmentError("adversary returned " + std::to_string(table.size()) + " losses for " +
                               std::to_string(structure.pair_count()) + " state-action pairs");
    }
    for (double v : table) {
        if (!std::isfinite(v)) throw EnvironmentError("adversary returned a non-finite loss");
    }
    return table;
}

}  // namespace

ScbRlRun scb_rl_run(EpisodicSimulator& simulator, MdpAdversary& adversary, std::size_t episodes,
                    std::uint64_t seed, const ScbRlOptions& options, const EpisodeObserver& on_episode) {
    const LayeredStructure& st = simulator.structure();
    if (!(adversary.structure() == st)) throw InvalidInput("adversary and simulator disagree on the MDP shape");
    ScbRlRun run;
    run.parameters = resolve_scb_rl_parameters(st, episodes, options);
    const ScbRlParameters& p = run.parameters;
    RandomStream rng(seed, StreamKey::algorithm);
    LayerClipState clip(st.horizon());
    std::vector<EpisodePath> history;
    history.reserve(episodes);
    run.records.reserve(episodes);
    run.losses.reserve(episodes);

    auto observe = [&](const EpisodePath& path) -> EpisodeRecord& {
        const std::size_t t = run.records.size() + 1;
        run.losses.push_back(checked_table(adversary, t, history, st));
        history.push_back(path);
        EpisodeRecord rec;
        rec.episode = t;
        rec.states = path.states;
        rec.actions = path.actions;
        rec.thresholds_before = clip.thresholds;
        for (std::size_t h = 0; h < path.states.size(); ++h) {
            const double loss = run.losses.back()[st.pair_index(path.states[h], path.actions[h])];
            rec.losses.push_back(loss);
            rec.episode_loss += loss;
        }
        run.records.push_back(std::move(rec));
        return run.records.back();
    };

    // phase 1
    std::vector<MixturePolicy> exploration;
    exploration.reserve(st.state_count());
    for (std::size_t s = 0; s < st.state_count(); ++s) {
        auto explored = [&](const EpisodePath& path) {
            EpisodeRecord& rec = observe(path);
            rec.phase = 1;
            rec.explored_state = s;
            rec.thresholds_after = clip.thresholds;
            rec.epoch = 0;
            if (on_episode) on_episode(rec, run.losses.back());
        };
        if (options.early_stopping) {
            EarlyStoppedExploration es =
                rf_elp_es(simulator, s, p.explore_episodes, options.kappa, rng, options.explorer, explored);
            run.exploration_episodes.push_back(es.episodes_used);
            exploration.push_back(es.policy.compressed());
        } else {
            exploration.push_back(rf_elp(simulator, s, p.explore_episodes, rng, options.explorer, explored).compressed());
            run.exploration_episodes.push_back(p.explore_episodes);
        }
    }

    // phase 2
    UobRepsExState state =
        make_uob_reps_ex(st, UobRepsParameters{p.eta, p.beta, p.gamma}, p.log_term, std::move(exploration));
    state.solver = options.solver;
    std::vector<double> offset(st.horizon());
    while (run.records.size() < episodes) {
        const std::size_t member = rng.sample(state.played.weights);
        const EpisodePath path = run_episode(simulator, state.played.members[member], rng);
        EpisodeRecord& rec = observe(path);
        rec.phase = 2;
        rec.member = member;
        const std::vector<double> before = clip.thresholds;
        for (std::size_t h = 0; h < st.horizon(); ++h) offset[h] = clip.clip(h, rec.losses[h]) + before[h];
        UobRepsRoundInfo info = uob_reps_ex_round(state, path, offset, before);
        for (std::size_t h = 0; h < st.horizon(); ++h) clip.update(h, rec.losses[h]);
        rec.thresholds_after = clip.thresholds;
        rec.upper = std::move(info.upper);
        rec.epoch = state.confidence.epoch();
        if (on_episode) on_episode(rec, run.losses.back());
    }
    return run;
}

}  // namespace scalefree
