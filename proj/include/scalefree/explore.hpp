#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "scalefree/mdp.hpp"
#include "scalefree/rng.hpp"

namespace scalefree {

// r(s', a') = 1{s' = target}. Each layer is visited once per episode, so the
// episode return is the indicator of visiting the target.
struct ReachabilityReward {
    std::size_t target = 0;
};

struct ExplorerOptions {
    // Bonus b(s,a) = variance_bonus * sqrt(Var / N) + count_bonus / N.
    double variance_bonus = 1.0;
    double count_bonus = 1.0;
};

// Visit counters of the optimistic explorer. The explorer only sees sampled
// transitions; the model it plans with is the empirical one.
class ExplorerState {
public:
    explicit ExplorerState(const LayeredStructure& structure);

    const LayeredStructure& structure() const { return structure_; }
    std::size_t episodes() const { return episodes_; }
    double pair_count(std::size_t state, std::size_t action) const {
        return pair_counts_[structure_.pair_index(state, action)];
    }
    double transition_count(std::size_t state, std::size_t action, std::size_t next_in_layer) const {
        return transition_counts_[structure_.row_offset(state, action) + next_in_layer];
    }

    void record(const EpisodePath& path);

    // Optimistic value iteration on the empirical model with the bonus above,
    // values clipped to [0, 1]; greedy with lowest-index tie-break.
    Policy optimistic_policy(const ReachabilityReward& reward, const ExplorerOptions& options) const;

    // sum_{s'} M(s'|s,a) == N(s,a) on every row.
    bool counters_consistent() const;

private:
    LayeredStructure structure_;
    std::vector<double> pair_counts_;
    std::vector<double> transition_counts_;
    std::size_t episodes_ = 0;
};

// Called after every exploration episode; lets a caller treat exploration
// episodes as game episodes.
using EpisodeCallback = std::function<void(const EpisodePath&)>;

// Runs the explorer for `episodes` episodes and returns the policy played in
// each one.
std::vector<Policy> mvp_explore(EpisodicSimulator& simulator, const ReachabilityReward& reward,
                                std::size_t episodes, RandomStream& rng, const ExplorerOptions& options = {},
                                const EpisodeCallback& on_episode = {});

// Per-episode mixture of Markov policies: draw a member with probability
// weights[j] once per episode, then follow it.
struct MixturePolicy {
    std::vector<Policy> members;
    std::vector<double> weights;

    // Uniform mixture of `members` with pi(.|target) overridden to Uniform(A).
    static MixturePolicy uniform_with_override(std::vector<Policy> members, std::size_t target);

    // Identical members merged, weights summed; first-occurrence order kept.
    MixturePolicy compressed() const;
};

OccupancyMeasure occupancy_of_mixture(const LayeredMdp& mdp, const MixturePolicy& mixture);
double reach_probability(const LayeredMdp& mdp, const MixturePolicy& mixture, std::size_t target);

EpisodePath run_mixture_episode(EpisodicSimulator& simulator, const MixturePolicy& mixture, RandomStream& rng);

MixturePolicy rf_elp(EpisodicSimulator& simulator, std::size_t target, std::size_t episodes, RandomStream& rng,
                     const ExplorerOptions& options = {}, const EpisodeCallback& on_episode = {});

struct EarlyStoppedExploration {
    MixturePolicy policy;
    std::size_t episodes_used = 0;
    double target_visits = 0.0;
};

// Early-stopping variant: stops after the first episode at which the
// cumulative number of target visits reaches kappa * S * A * H, or at `cap`.
EarlyStoppedExploration rf_elp_es(EpisodicSimulator& simulator, std::size_t target, std::size_t cap,
                                  double kappa, RandomStream& rng, const ExplorerOptions& options = {},
                                  const EpisodeCallback& on_episode = {});

}  // namespace scalefree
