#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scalefree/confidence.hpp"
#include "scalefree/mdp.hpp"

namespace scalefree {

// Entropy weight per layer, C_h / eta. Layers whose threshold is still zero
// get the largest weight among the others (1/eta when every threshold is
// zero): the weight must stay positive for strict convexity and must scale
// with the losses so the solution is unchanged under rescaling.
std::vector<double> ftrl_layer_weights(std::span<const double> thresholds, double eta);

// sum_{s,a} L(s,a) q(s,a) + sum_h w_h sum_{(s,a) in layer h} q(s,a) ln q(s,a).
double occupancy_objective(const LayeredStructure& structure, const OccupancyMeasure& q,
                           std::span<const double> cumulative, std::span<const double> weights);

struct OccupancySolverOptions {
    double gap_tolerance = 1e-10;  // barrier duality gap, objective divided by max weight
    // if centering breaks down at rounding level, a previously centered point
    // with at most this gap is returned instead of throwing
    double fallback_gap = 1e-7;
    double barrier_growth = 20.0;
    std::size_t max_newton_steps = 3000;
};

struct OccupancySolverStats {
    std::size_t variables = 0;
    std::size_t constraints = 0;
    std::size_t newton_steps = 0;
    double final_gap = 0.0;
};

// argmin over occupancy measures consistent with some kernel in `set` of the
// objective above, with weights from ftrl_layer_weights. Log-barrier interior
// point method over the (s,a,s') parameterization; rows pinned by a zero
// radius collapse to their (s,a) mass. Throws NumericalError when Newton does
// not converge and no centered point meets fallback_gap.
OccupancyMeasure occupancy_ftrl_step(std::span<const double> cumulative, const ConfidenceSet& set,
                                     std::span<const double> thresholds, double eta,
                                     const OccupancySolverOptions& options = {},
                                     OccupancySolverStats* stats = nullptr);

// Same program with explicit layer weights.
OccupancyMeasure solve_occupancy_program(std::span<const double> cumulative, const ConfidenceSet& set,
                                         std::span<const double> weights,
                                         const OccupancySolverOptions& options = {},
                                         OccupancySolverStats* stats = nullptr);

}  // namespace scalefree
