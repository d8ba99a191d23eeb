#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scalefree/rng.hpp"

namespace scalefree {

// Shape of a layered episodic MDP. Acting layers are 0..H-1; a fixed source
// state feeds layer 0 through an initial distribution and every state of
// layer H-1 moves to a single absorbing terminal. Global state ids run
// consecutively through the layers.
class LayeredStructure {
public:
    LayeredStructure() = default;
    LayeredStructure(std::vector<std::size_t> layer_sizes, std::size_t actions);

    std::size_t horizon() const { return sizes_.size(); }
    std::size_t actions() const { return actions_; }
    std::size_t state_count() const { return begin_.back(); }
    std::size_t pair_count() const { return state_count() * actions_; }
    std::size_t layer_size(std::size_t h) const { return sizes_[h]; }
    std::size_t layer_begin(std::size_t h) const { return begin_[h]; }
    std::size_t layer_end(std::size_t h) const { return begin_[h + 1]; }
    std::size_t layer_of(std::size_t state) const { return layer_[state]; }
    const std::vector<std::size_t>& layer_sizes() const { return sizes_; }

    std::size_t pair_index(std::size_t state, std::size_t action) const { return state * actions_ + action; }

    // Transition rows exist for states outside the last layer; each row is a
    // distribution over the next layer, stored contiguously.
    bool has_row(std::size_t state) const { return layer_[state] + 1 < sizes_.size(); }
    std::size_t row_length(std::size_t state) const { return has_row(state) ? sizes_[layer_[state] + 1] : 0; }
    std::size_t row_offset(std::size_t state, std::size_t action) const {
        return row_begin_[state] + action * row_length(state);
    }
    std::size_t row_storage() const { return row_begin_.back(); }

    // Sentinel returned by simulators after the last layer.
    std::size_t terminal() const { return state_count(); }

    bool operator==(const LayeredStructure&) const = default;

private:
    std::vector<std::size_t> sizes_;
    std::size_t actions_ = 0;
    std::vector<std::size_t> begin_{0};
    std::vector<std::size_t> layer_;
    std::vector<std::size_t> row_begin_{0};
};

// initial: distribution over layer 0; rows: P(.|s,a) laid out by row_offset.
struct TransitionKernel {
    std::vector<double> initial;
    std::vector<double> rows;
};

TransitionKernel uniform_kernel(const LayeredStructure& structure);
// Throws InvalidInput unless every row is a distribution within `tolerance`.
void validate_kernel(const LayeredStructure& structure, const TransitionKernel& kernel, double tolerance = 1e-12);

class LayeredMdp {
public:
    LayeredMdp(LayeredStructure structure, TransitionKernel kernel);

    const LayeredStructure& structure() const { return structure_; }
    const TransitionKernel& kernel() const { return kernel_; }
    std::span<const double> initial() const { return kernel_.initial; }
    std::span<const double> transition(std::size_t state, std::size_t action) const {
        return {kernel_.rows.data() + structure_.row_offset(state, action), structure_.row_length(state)};
    }

    // The equal-layer-size convention S_h = S/H.
    bool has_equal_layers() const;

private:
    LayeredStructure structure_;
    TransitionKernel kernel_;
};

// Row-major pi(a|s).
class Policy {
public:
    Policy() = default;
    Policy(std::size_t states, std::size_t actions, std::vector<double> probs);
    static Policy uniform(const LayeredStructure& structure);
    static Policy deterministic(const LayeredStructure& structure, std::span<const std::size_t> choice);

    std::size_t states() const { return states_; }
    std::size_t actions() const { return actions_; }
    std::span<const double> row(std::size_t state) const { return {probs_.data() + state * actions_, actions_}; }
    std::span<double> row(std::size_t state) { return {probs_.data() + state * actions_, actions_}; }
    double operator()(std::size_t state, std::size_t action) const { return probs_[state * actions_ + action]; }
    const std::vector<double>& probs() const { return probs_; }

    bool operator==(const Policy&) const = default;

private:
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<double> probs_;
};

// q(s,a,s') over consecutive layers, with the (s,a) marginals and the
// layer-0 entry distribution it was built from.
struct OccupancyMeasure {
    std::vector<double> initial;
    std::vector<double> pairs;
    std::vector<double> transitions;

    double state_mass(const LayeredStructure& structure, std::size_t state) const;
};

// Largest violation among: non-negativity, unit mass per layer, row sums
// q(s,a,.) = q(s,a), flow conservation into every state.
double occupancy_violation(const LayeredStructure& structure, const OccupancyMeasure& q);
// Throws NumericalError when occupancy_violation exceeds `tolerance`.
void validate_occupancy(const LayeredStructure& structure, const OccupancyMeasure& q, double tolerance = 1e-9);

OccupancyMeasure occupancy_of_policy(const LayeredStructure& structure, const TransitionKernel& kernel,
                                     const Policy& policy);
OccupancyMeasure occupancy_of_policy(const LayeredMdp& mdp, const Policy& policy);

// pi(a|s) = q(s,a) / q(s); zero-mass states get the uniform row.
Policy policy_of_occupancy(const LayeredStructure& structure, const OccupancyMeasure& q);

// P(s'|s,a) = q(s,a,s') / q(s,a); zero-mass pairs get the uniform row.
TransitionKernel induced_kernel(const LayeredStructure& structure, const OccupancyMeasure& q);

// Losses indexed by pair_index(s, a).
using LossTable = std::vector<double>;

double inner_product(const OccupancyMeasure& q, std::span<const double> losses);

// Expected episode loss by backward policy evaluation.
double policy_loss(const LayeredMdp& mdp, const Policy& policy, std::span<const double> losses);

struct TrajectoryStep {
    std::size_t state = 0;
    std::size_t action = 0;
    double loss = 0.0;
};
using Trajectory = std::vector<TrajectoryStep>;

Trajectory sample_trajectory(const LayeredMdp& mdp, const Policy& policy, std::span<const double> losses,
                             RandomStream& rng);

struct HindsightOptimum {
    OccupancyMeasure occupancy;
    Policy policy;
    double value = 0.0;
};

// Backward DP; a deterministic optimal policy with lowest-index tie-break.
HindsightOptimum best_occupancy_in_hindsight(const LayeredMdp& mdp, std::span<const double> loss_sum);

// max_pi q^{P,pi}(target), by backward DP on the reach indicator.
double max_reach_probability(const LayeredMdp& mdp, std::size_t target);

// Episodic environment as seen by a learner that does not know P.
class EpisodicSimulator {
public:
    virtual ~EpisodicSimulator() = default;
    virtual const LayeredStructure& structure() const = 0;
    virtual std::size_t reset() = 0;
    // Next state, or structure().terminal() after the last layer.
    virtual std::size_t step(std::size_t state, std::size_t action) = 0;
};

class MdpSimulator final : public EpisodicSimulator {
public:
    MdpSimulator(const LayeredMdp& mdp, RandomStream rng) : mdp_(mdp), rng_(std::move(rng)) {}
    const LayeredStructure& structure() const override { return mdp_.structure(); }
    std::size_t reset() override;
    std::size_t step(std::size_t state, std::size_t action) override;
    const LayeredMdp& mdp() const { return mdp_; }

private:
    const LayeredMdp& mdp_;
    RandomStream rng_;
};

// Visited (state, action) per layer for one episode; actions drawn from
// `action_rng`, transitions from the simulator.
struct EpisodePath {
    std::vector<std::size_t> states;
    std::vector<std::size_t> actions;
};

EpisodePath run_episode(EpisodicSimulator& simulator, const Policy& policy, RandomStream& action_rng);

}  // namespace scalefree
