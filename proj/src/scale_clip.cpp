#include "scalefree/scale_clip.hpp"

#include <algorithm>
#include <cmath>

#include "scalefree/errors.hpp"

namespace scalefree {

namespace {

std::vector<double> one_hot_estimate(double numerator, double denominator, std::size_t played,
                                     std::size_t arms) {
    if (played >= arms) throw InvalidInput("played arm index out of range");
    std::vector<double> estimate(arms, 0.0);
    // numerator is zero whenever C_t = 0; skip the division so no 0/q is formed.
    if (numerator != 0.0) estimate[played] = numerator / denominator;
    return estimate;
}

}  // namespace

double clip(double loss, const ClipState& state) {
    return std::max(-state.threshold, std::min(state.threshold, loss));
}

ClipState update_threshold(double loss, const ClipState& state) {
    ClipState next = state;
    if (std::abs(loss) > state.threshold) next.threshold = 2.0 * std::abs(loss);
    next.round = state.round + 1;
    return next;
}

std::vector<double> estimate_iw(double clipped, const ClipState& state, std::size_t played, double prob,
                                std::size_t arms) {
    if (!(prob > 0.0) || prob > 1.0 + 1e-12) throw InvalidInput("played-arm probability must lie in (0, 1]");
    return one_hot_estimate(clipped + state.threshold, prob, played, arms);
}

std::vector<double> estimate_ix(double clipped, const ClipState& state, std::size_t played, double prob,
                                double gamma, std::size_t arms) {
    if (!(prob > 0.0) || prob > 1.0 + 1e-12) throw InvalidInput("played-arm probability must lie in (0, 1]");
    if (!(gamma >= 0.0)) throw InvalidInput("implicit exploration rate must be non-negative");
    return one_hot_estimate(clipped + state.threshold, prob + gamma, played, arms);
}

ScbRates schedule_scb(const ClipState& state, std::size_t arms) {
    const double n = static_cast<double>(arms);
    const double t = static_cast<double>(state.round);
    ScbRates rates;
    rates.beta = n / (2.0 * n + std::sqrt(n * t));
    if (state.threshold > 0.0) rates.eta = LearningRate::finite(1.0 / (2.0 * state.threshold * std::sqrt(t)));
    return rates;
}

ScbIxRates schedule_scbix(const ClipState& state, std::size_t arms) {
    if (arms < 2) throw InvalidInput("SCB-IX needs at least two arms");
    const double n = static_cast<double>(arms);
    const double t = static_cast<double>(state.round);
    const double nlogn = n * std::log(n);
    ScbIxRates rates;
    rates.beta = std::sqrt(nlogn / (nlogn + t));
    if (state.threshold > 0.0) {
        const double base = std::sqrt(std::log(n) / (n * t));
        rates.eta = LearningRate::finite(base / state.threshold);
        // eta_t C_t / 2 written without the round trip through C_t, so gamma is
        // bit-identical under loss rescaling.
        rates.gamma = base / 2.0;
    }
    return rates;
}

}  // namespace scalefree
