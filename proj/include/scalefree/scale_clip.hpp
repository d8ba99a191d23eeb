#pragma once

#include <cstddef>
#include <vector>

#include "scalefree/simplex_ftrl.hpp"

namespace scalefree {

// Clipping threshold C_t and the round index t it applies to.
struct ClipState {
    double threshold = 0.0;
    std::size_t round = 1;
};

// Clamp into [-C_t, C_t].
double clip(double loss, const ClipState& state);

// C_{t+1} = 2|loss| if |loss| > C_t, else C_t. Advances the round.
ClipState update_threshold(double loss, const ClipState& state);

// One-hot estimator with entry (clipped + C_t) / prob at the played arm.
std::vector<double> estimate_iw(double clipped, const ClipState& state, std::size_t played, double prob,
                                std::size_t arms);

// Implicit-exploration variant, denominator prob + gamma.
std::vector<double> estimate_ix(double clipped, const ClipState& state, std::size_t played, double prob,
                                double gamma, std::size_t arms);

struct ScbRates {
    LearningRate eta = LearningRate::unbounded();
    double beta = 0.0;
};

struct ScbIxRates {
    LearningRate eta = LearningRate::unbounded();
    double beta = 0.0;
    double gamma = 0.0;
};

// eta_t = 1 / (2 C_t sqrt(t)), beta_t = n / (2n + sqrt(n t)).
ScbRates schedule_scb(const ClipState& state, std::size_t arms);

// eta_t = sqrt(ln n / (n t)) / C_t, beta_t = sqrt(n ln n / (n ln n + t)),
// gamma_t = eta_t C_t / 2 (zero while C_t = 0).
ScbIxRates schedule_scbix(const ClipState& state, std::size_t arms);

}  // namespace scalefree
