#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "scalefree/confidence.hpp"
#include "scalefree/explore.hpp"
#include "scalefree/mdp.hpp"
#include "scalefree/occupancy_ftrl.hpp"

namespace scalefree {

// Loss tables ell_t(s,a) for the episodic game. Sees the episode index and
// the learner's past paths only.
class MdpAdversary {
public:
    virtual ~MdpAdversary() = default;
    virtual const LayeredStructure& structure() const = 0;
    virtual LossTable losses(std::size_t episode, std::span<const EpisodePath> history) = 0;
};

// Per-layer clipping thresholds C_{t,h}.
struct LayerClipState {
    std::vector<double> thresholds;

    explicit LayerClipState(std::size_t horizon = 0) : thresholds(horizon, 0.0) {}
    double clip(std::size_t layer, double loss) const;
    // 2|loss| when |loss| exceeds the layer's threshold.
    void update(std::size_t layer, double loss);
};

struct UobRepsParameters {
    double eta = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
};

struct UobRepsExState {
    LayeredStructure structure;
    UobRepsParameters params;
    ConfidenceSet confidence;
    std::vector<double> cumulative;          // sum of estimators per pair
    std::vector<MixturePolicy> exploration;  // one per state, compressed
    Policy ftrl_policy;
    OccupancyMeasure ftrl_occupancy;
    MixturePolicy played;  // ftrl_policy w.p. 1 - beta, else a state's exploration mixture
    OccupancySolverOptions solver;

    // upper reach of the exploration part, per state, for the current epoch
    std::size_t cached_epoch = 0;
    std::vector<double> exploration_reach_cache;
    std::vector<char> exploration_reach_known;
};

// log_term = ln(T S A / delta). The first FTRL iterate is the maximum-entropy
// point, i.e. the uniform policy.
UobRepsExState make_uob_reps_ex(const LayeredStructure& structure, const UobRepsParameters& params,
                                double log_term, std::vector<MixturePolicy> exploration);

// Mixture actually played: the FTRL policy with weight 1 - beta and every
// exploration member with weight beta / S times its own weight.
MixturePolicy mix_exploration(const Policy& ftrl_policy, const std::vector<MixturePolicy>& exploration,
                              double beta);

// Sum over members of weight * pi_j(a|s) * comp_uob(pi_j, s). Upper bounds
// the mixture's occupancy of (s,a) under every kernel in the set.
double mixture_upper_occupancy(const MixturePolicy& mixture, std::size_t state, std::size_t action,
                               const ConfidenceSet& set);

struct UobRepsRoundInfo {
    std::vector<double> upper;      // u_t(s_h, a_h) per layer
    std::vector<double> estimates;  // estimator entry at (s_h, a_h) per layer
    bool epoch_advanced = false;
};

// One episode of UOB-REPS-EX. `offset_losses` are ell^c + C_{t,h} along the
// path and `thresholds` the C_{t,h} they were clipped with. On return
// state.played holds the next episode's policy.
UobRepsRoundInfo uob_reps_ex_round(UobRepsExState& state, const EpisodePath& path,
                                   std::span<const double> offset_losses, std::span<const double> thresholds);

struct ScbRlOptions {
    std::optional<double> xi;
    std::optional<double> beta;
    std::optional<double> gamma;
    std::optional<double> eta;
    double delta = 0.01;
    bool early_stopping = false;
    double kappa = 4.0;
    ExplorerOptions explorer;
    OccupancySolverOptions solver;
};

struct ScbRlParameters {
    double xi = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double eta = 0.0;
    double delta = 0.0;
    double log_term = 0.0;
    std::size_t explore_episodes = 0;  // per state, max(1, floor(xi T))
};

// Defaults: xi = beta = sqrt(SA/T), eta = gamma = sqrt(H ln(SAT/delta) / (SAT)).
ScbRlParameters resolve_scb_rl_parameters(const LayeredStructure& structure, std::size_t episodes,
                                          const ScbRlOptions& options);

struct EpisodeRecord {
    std::size_t episode = 0;  // 1-based
    int phase = 1;
    std::size_t explored_state = 0;  // phase 1 only
    std::size_t member = 0;          // phase 2: mixture member played (0 is the FTRL policy when beta < 1)
    std::size_t epoch = 0;
    std::vector<std::size_t> states;
    std::vector<std::size_t> actions;
    std::vector<double> losses;
    std::vector<double> thresholds_before;
    std::vector<double> thresholds_after;
    std::vector<double> upper;
    double episode_loss = 0.0;
};

struct ScbRlRun {
    ScbRlParameters parameters;
    std::vector<EpisodeRecord> records;
    std::vector<LossTable> losses;
    std::vector<std::size_t> exploration_episodes;  // per state
};

// Phase 1 explores every state with RF-ELP (or RF-ELP-ES); phase 2 runs the
// clip / offset / UOB-REPS-EX loop. Exploration episodes are game episodes and
// count toward regret; they do not move the thresholds.
using EpisodeObserver = std::function<void(const EpisodeRecord&, const LossTable&)>;

ScbRlRun scb_rl_run(EpisodicSimulator& simulator, MdpAdversary& adversary, std::size_t episodes,
                    std::uint64_t seed, const ScbRlOptions& options = {}, const EpisodeObserver& on_episode = {});

}  // namespace scalefree
