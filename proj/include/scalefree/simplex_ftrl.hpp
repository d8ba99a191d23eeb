#pragma once

#include <span>
#include <vector>

namespace scalefree {

using ActionDistribution = std::vector<double>;

// FTRL learning rate. The unbounded value stands for eta = infinity, the state
// of the scale-free learners while no nonzero loss has been seen.
class LearningRate {
public:
    static LearningRate unbounded() { return LearningRate{}; }
    static LearningRate finite(double eta);

    bool is_unbounded() const { return unbounded_; }
    // Throws InvalidInput when unbounded.
    double value() const;
    // +inf when unbounded.
    double as_double() const;

private:
    LearningRate() = default;
    bool unbounded_ = true;
    double eta_ = 0.0;
};

enum class Regularizer { tsallis_half, shannon };

/// argmin_{p in simplex} <L, p> + (1/eta) * (4 sqrt(n) - 4 sum_k sqrt(p_k)).
///
/// Stationarity gives p_k = 4 / (eta (L_k - lambda))^2. The multiplier is found
/// by safeguarded Newton on the shifted variable mu = eta (min L - lambda),
/// which lies in [2, 2 sqrt(n)]; from the left end Newton is monotone for the
/// convex decreasing constraint residual.
ActionDistribution solve_tsallis(std::span<const double> cumulative, LearningRate eta);

/// argmin_{p in simplex} <L, p> + (1/eta) * (log n + sum_k p_k log p_k),
/// i.e. the softmax of -eta L with max subtraction.
ActionDistribution solve_shannon(std::span<const double> cumulative, LearningRate eta);

ActionDistribution solve_ftrl(Regularizer reg, std::span<const double> cumulative, LearningRate eta);

double tsallis_value(std::span<const double> p);
double shannon_value(std::span<const double> p);

// <L, p> + (1/eta) Psi(p) for a finite rate.
double ftrl_objective(Regularizer reg, std::span<const double> cumulative, double eta,
                      std::span<const double> p);

}  // namespace scalefree
