#include "scalefree/explore.hpp"

#include <algorithm>
#include <cmath>

#include "scalefree/errors.hpp"

namespace scalefree {

ExplorerState::ExplorerState(const LayeredStructure& structure)
    : structure_(structure),
      pair_counts_(structure.pair_count(), 0.0),
      transition_counts_(structure.row_storage(), 0.0) {}

void ExplorerState::record(const EpisodePath& path) {
    for (std::size_t h = 0; h < path.states.size(); ++h) {
        const std::size_t s = path.states[h];
        const std::size_t a = path.actions[h];
        pair_counts_[structure_.pair_index(s, a)] += 1.0;
        if (h + 1 < path.states.size()) {
            const std::size_t next_local = path.states[h + 1] - structure_.layer_begin(h + 1);
            transition_counts_[structure_.row_offset(s, a) + next_local] += 1.0;
        }
    }
    ++episodes_;
}

Policy ExplorerState::optimistic_policy(const ReachabilityReward& reward, const ExplorerOptions& options) const {
    const std::size_t target_layer = structure_.layer_of(reward.target);
    std::vector<double> value(structure_.state_count(), 0.0);
    value[reward.target] = 1.0;
    std::vector<std::size_t> choice(structure_.state_count(), 0);

    for (std::size_t h = target_layer; h-- > 0;) {
        const std::size_t next_begin = structure_.layer_begin(h + 1);
        for (std::size_t s = structure_.layer_begin(h); s < structure_.layer_end(h); ++s) {
            double best = -1.0;
            for (std::size_t a = 0; a < structure_.actions(); ++a) {
                const double n = pair_count(s, a);
                double q = 1.0;
                if (n > 0.0) {
                    double mean = 0.0;
                    double second = 0.0;
                    const std::size_t offset = structure_.row_offset(s, a);
                    for (std::size_t j = 0; j < structure_.row_length(s); ++j) {
                        const double p = transition_counts_[offset + j] / n;
                        const double v = value[next_begin + j];
                        mean += p * v;
                        second += p * v * v;
                    }
                    const double variance = std::max(second - mean * mean, 0.0);
                    const double bonus = options.variance_bonus * std::sqrt(variance / n) + options.count_bonus / n;
                    q = std::min(1.0, mean + bonus);
                }
                if (q > best) {
                    best = q;
                    choice[s] = a;
                }
            }
            value[s] = best;
        }
    }
    return Policy::deterministic(structure_, choice);
}

bool ExplorerState::counters_consistent() const {
    for (std::size_t s = 0; s < structure_.state_count(); ++s) {
        if (!structure_.has_row(s)) continue;
        for (std::size_t a = 0; a < structure_.actions(); ++a) {
            double total = 0.0;
            for (std::size_t j = 0; j < structure_.row_length(s); ++j) total += transition_count(s, a, j);
            if (total != pair_count(s, a)) return false;
        }
    }
    return true;
}

std::vector<Policy> mvp_explore(EpisodicSimulator& simulator, const ReachabilityReward& reward,
                                std::size_t episodes, RandomStream& rng, const ExplorerOptions& options,
                                const EpisodeCallback& on_episode) {
    if (episodes < 1) throw InvalidInput("exploration needs at least one episode");
    const auto& structure = simulator.structure();
    if (reward.target >= structure.state_count()) throw InvalidInput("target state out of range");
    ExplorerState explorer(structure);
    std::vector<Policy> policies;
    policies.reserve(episodes);
    for (std::size_t k = 0; k < episodes; ++k) {
        policies.push_back(explorer.optimistic_policy(reward, options));
        const EpisodePath path = run_episode(simulator, policies.back(), rng);
        explorer.record(path);
        if (on_episode) on_episode(path);
    }
    return policies;
}

MixturePolicy MixturePolicy::uniform_with_override(std::vector<Policy> members, std::size_t target) {
    if (members.empty()) throw InvalidInput("a mixture needs at least one member");
    MixturePolicy mixture;
    const double w = 1.0 / static_cast<double>(members.size());
    for (Policy& member : members) {
        auto row = member.row(target);
        std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(row.size()));
    }
    mixture.members = std::move(members);
    mixture.weights.assign(mixture.members.size(), w);
    return mixture;
}

MixturePolicy MixturePolicy::compressed() const {
    MixturePolicy out;
    for (std::size_t j = 0; j < members.size(); ++j) {
        auto it = std::find(out.members.begin(), out.members.end(), members[j]);
        if (it == out.members.end()) {
            out.members.push_back(members[j]);
            out.weights.push_back(weights[j]);
        } else {
            out.weights[static_cast<std::size_t>(it - out.members.begin())] += weights[j];
        }
    }
    return out;
}

OccupancyMeasure occupancy_of_mixture(const LayeredMdp& mdp, const MixturePolicy& mixture) {
    OccupancyMeasure total;
    for (std::size_t j = 0; j < mixture.members.size(); ++j) {
        const OccupancyMeasure q = occupancy_of_policy(mdp, mixture.members[j]);
        if (j == 0) {
            total.initial = q.initial;
            total.pairs.assign(q.pairs.size(), 0.0);
            total.transitions.assign(q.transitions.size(), 0.0);
        }
        for (std::size_t i = 0; i < q.pairs.size(); ++i) total.pairs[i] += mixture.weights[j] * q.pairs[i];
        for (std::size_t i = 0; i < q.transitions.size(); ++i) {
            total.transitions[i] += mixture.weights[j] * q.transitions[i];
        }
    }
    return total;
}

double reach_probability(const LayeredMdp& mdp, const MixturePolicy& mixture, std::size_t target) {
    double total = 0.0;
    for (std::size_t j = 0; j < mixture.members.size(); ++j) {
        total += mixture.weights[j] * occupancy_of_policy(mdp, mixture.members[j]).state_mass(mdp.structure(), target);
    }
    return total;
}

EpisodePath run_mixture_episode(EpisodicSimulator& simulator, const MixturePolicy& mixture, RandomStream& rng) {
    const std::size_t member = rng.sample(mixture.weights);
    return run_episode(simulator, mixture.members[member], rng);
}

MixturePolicy rf_elp(EpisodicSimulator& simulator, std::size_t target, std::size_t episodes, RandomStream& rng,
                     const ExplorerOptions& options, const EpisodeCallback& on_episode) {
    return MixturePolicy::uniform_with_override(mvp_explore(simulator, {target}, episodes, rng, options, on_episode),
                                                target);
}

EarlyStoppedExploration rf_elp_es(EpisodicSimulator& simulator, std::size_t target, std::size_t cap,
                                  double kappa, RandomStream& rng, const ExplorerOptions& options,
                                  const EpisodeCallback& on_episode) {
    if (cap < 1) throw InvalidInput("exploration needs at least one episode");
    if (!(kappa > 0.0)) throw InvalidInput("stopping constant must be positive");
    const auto& structure = simulator.structure();
    if (target >= structure.state_count()) throw InvalidInput("target state out of range");
    const double stop_at = kappa * static_cast<double>(structure.state_count() * structure.actions() *
                                                        structure.horizon());
    ExplorerState explorer(structure);
    const ReachabilityReward reward{target};
    std::vector<Policy> policies;
    double visits = 0.0;
    for (std::size_t k = 0; k < cap; ++k) {
        policies.push_back(explorer.optimistic_policy(reward, options));
        const EpisodePath path = run_episode(simulator, policies.back(), rng);
        explorer.record(path);
        if (on_episode) on_episode(path);
        if (std::find(path.states.begin(), path.states.end(), target) != path.states.end()) visits += 1.0;
        if (visits >= stop_at) break;
    }
    EarlyStoppedExploration result;
    result.episodes_used = policies.size();
    result.target_visits = visits;
    result.policy = MixturePolicy::uniform_with_override(std::move(policies), target);
    return result;
}

}  // namespace scalefree
