#include "scalefree/simplex_ftrl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scalefree/errors.hpp"

namespace scalefree {

namespace {

constexpr int kMaxIterations = 200;
constexpr double kSumTolerance = 1e-12;

void check_input(std::span<const double> cumulative) {
    if (cumulative.empty()) throw InvalidInput("cumulative loss must be non-empty");
    for (double v : cumulative) {
        if (!std::isfinite(v)) throw InvalidInput("cumulative loss has a non-finite entry");
    }
}

ActionDistribution uniform(std::size_t n) { return ActionDistribution(n, 1.0 / static_cast<double>(n)); }

void normalize(ActionDistribution& p) {
    double total = 0.0;
    for (double v : p) total += v;
    for (double& v : p) v /= total;
}

}  // namespace

LearningRate LearningRate::finite(double eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw InvalidInput("learning rate must be positive and finite, got " + std::to_string(eta));
    }
    LearningRate rate;
    rate.unbounded_ = false;
    rate.eta_ = eta;
    return rate;
}

double LearningRate::value() const {
    if (unbounded_) throw InvalidInput("learning rate is unbounded");
    return eta_;
}

double LearningRate::as_double() const {
    return unbounded_ ? std::numeric_limits<double>::infinity() : eta_;
}

ActionDistribution solve_tsallis(std::span<const double> cumulative, LearningRate eta) {
    check_input(cumulative);
    const std::size_t n = cumulative.size();
    if (n == 1) return {1.0};
    if (eta.is_unbounded()) return uniform(n);

    const double rate = eta.value();
    const double lowest = *std::min_element(cumulative.begin(), cumulative.end());
    std::vector<double> gap(n);
    for (std::size_t k = 0; k < n; ++k) gap[k] = rate * (cumulative[k] - lowest);

    // residual(mu) = sum_k 4 / (gap_k + mu)^2 - 1, decreasing and convex in mu.
    auto residual = [&](double mu, double* slope) {
        double sum = 0.0;
        double deriv = 0.0;
        for (double g : gap) {
            const double x = g + mu;
            const double inv = 1.0 / x;
            const double inv2 = inv * inv;
            sum += 4.0 * inv2;
            deriv -= 8.0 * inv2 * inv;
        }
        if (slope != nullptr) *slope = deriv;
        return sum - 1.0;
    };

    double lo = 2.0;
    double hi = 2.0 * std::sqrt(static_cast<double>(n));
    double mu = lo;
    bool converged = false;
    for (int it = 0; it < kMaxIterations; ++it) {
        double slope = 0.0;
        const double r = residual(mu, &slope);
        if (r > 0.0) {
            lo = mu;
        } else {
            hi = mu;
        }
        if (std::abs(r) < kSumTolerance) {
            // A couple of extra steps push the residual to rounding level.
            double next = mu - r / slope;
            if (next > lo && next < hi) mu = next;
            converged = true;
            break;
        }
        double next = mu - r / slope;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == mu) {
            converged = std::abs(r) < 1e-9;
            break;
        }
        mu = next;
    }
    if (!converged) throw NumericalError("Tsallis FTRL solve did not converge");

    ActionDistribution p(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double x = gap[k] + mu;
        p[k] = 4.0 / (x * x);
    }
    normalize(p);
    return p;
}

ActionDistribution solve_shannon(std::span<const double> cumulative, LearningRate eta) {
    check_input(cumulative);
    const std::size_t n = cumulative.size();
    if (n == 1) return {1.0};
    if (eta.is_unbounded()) return uniform(n);

    const double rate = eta.value();
    const double lowest = *std::min_element(cumulative.begin(), cumulative.end());
    ActionDistribution p(n);
    for (std::size_t k = 0; k < n; ++k) p[k] = std::exp(-rate * (cumulative[k] - lowest));
    normalize(p);
    return p;
}

ActionDistribution solve_ftrl(Regularizer reg, std::span<const double> cumulative, LearningRate eta) {
    return reg == Regularizer::tsallis_half ? solve_tsallis(cumulative, eta) : solve_shannon(cumulative, eta);
}

double tsallis_value(std::span<const double> p) {
    double sum = 0.0;
    for (double v : p) sum += std::sqrt(std::max(v, 0.0));
    return 4.0 * std::sqrt(static_cast<double>(p.size())) - 4.0 * sum;
}

double shannon_value(std::span<const double> p) {
    double sum = std::log(static_cast<double>(p.size()));
    for (double v : p) {
        if (v > 0.0) sum += v * std::log(v);
    }
    return sum;
}

double ftrl_objective(Regularizer reg, std::span<const double> cumulative, double eta,
                      std::span<const double> p) {
    double linear = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) linear += cumulative[k] * p[k];
    const double psi = reg == Regularizer::tsallis_half ? tsallis_value(p) : shannon_value(p);
    return linear + psi / eta;
}

}  // namespace scalefree
