#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scalefree/mdp.hpp"

namespace scalefree {

// Entrywise interval for one transition row (or the start row).
struct RowBox {
    std::span<const double> center;
    std::span<const double> radius;

    double lower(std::size_t j) const;
    double upper(std::size_t j) const;
};

// Transition confidence set with epoch doubling.
//
// The start distribution over layer 0 is treated as one more unknown row,
// visited once per episode. Counters are cumulative; `snapshot` holds the
// counts at the start of the current epoch. Center and radius are frozen
// between epochs. Rows that were never visited are unrestricted.
class ConfidenceSet {
public:
    ConfidenceSet() = default;
    // log_term = ln(T S A / delta).
    ConfidenceSet(const LayeredStructure& structure, double log_term);

    // A set pinned to one kernel (radius 0), or with explicit center/radius.
    static ConfidenceSet singleton(const LayeredStructure& structure, const TransitionKernel& kernel);
    static ConfidenceSet from_parts(const LayeredStructure& structure, TransitionKernel center,
                                    TransitionKernel radius);

    const LayeredStructure& structure() const { return structure_; }
    std::size_t epoch() const { return epoch_; }
    double log_term() const { return log_term_; }

    // Adds the episode's transitions; returns true when the epoch advanced.
    bool update(const EpisodePath& path);

    double pair_count(std::size_t state, std::size_t action) const {
        return counts_[structure_.pair_index(state, action)];
    }
    double start_count() const { return start_count_; }
    double snapshot_count(std::size_t state, std::size_t action) const {
        return snapshot_[structure_.pair_index(state, action)];
    }
    double transition_count(std::size_t state, std::size_t action, std::size_t next_in_layer) const {
        return transition_counts_[structure_.row_offset(state, action) + next_in_layer];
    }
    double start_visits(std::size_t first_in_layer) const { return start_visits_[first_in_layer]; }

    const TransitionKernel& center() const { return center_; }
    const TransitionKernel& radius() const { return radius_; }

    RowBox start_box() const { return {center_.initial, radius_.initial}; }
    RowBox row_box(std::size_t state, std::size_t action) const;

    // Every entry of `kernel` inside its interval (up to `slack`).
    bool contains(const TransitionKernel& kernel, double slack = 0.0) const;

    // 4 sqrt(pbar L / max(1, n-1)) + 28 L / (3 max(1, n-1)).
    static double radius_formula(double pbar, double n, double log_term);

private:
    void refresh();

    LayeredStructure structure_;
    double log_term_ = 0.0;
    std::size_t epoch_ = 1;
    double start_count_ = 0.0;
    double start_snapshot_ = 0.0;
    std::vector<double> start_visits_;
    std::vector<double> counts_;
    std::vector<double> snapshot_;
    std::vector<double> transition_counts_;
    TransitionKernel center_;
    TransitionKernel radius_;
};

// max of sum_j p_j values_j over the box intersected with the simplex:
// start at the lower ends, then fill in decreasing order of value.
// Throws NumericalError when the intersection is empty.
double max_over_box(const RowBox& box, std::span<const double> values);
// The maximizing row itself.
std::vector<double> argmax_over_box(const RowBox& box, std::span<const double> values);

// max over kernels in the set of q^{P,pi}(target). Backward DP on the reach
// value; exact because the set is a product of per-row boxes.
double comp_uob(const Policy& policy, std::size_t target, const ConfidenceSet& set);

// pi(a|s) * comp_uob(pi, s).
double comp_uob(const Policy& policy, std::size_t state, std::size_t action, const ConfidenceSet& set);

}  // namespace scalefree
