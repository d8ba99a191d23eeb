#include "scalefree/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scalefree/errors.hpp"

namespace scalefree {

namespace {

constexpr double kUnrestricted = std::numeric_limits<double>::infinity();
constexpr double kBoxSlack = 1e-12;

}  // namespace

double RowBox::lower(std::size_t j) const { return std::max(0.0, center[j] - radius[j]); }
double RowBox::upper(std::size_t j) const { return std::min(1.0, center[j] + radius[j]); }

ConfidenceSet::ConfidenceSet(const LayeredStructure& structure, double log_term)
    : structure_(structure),
      log_term_(log_term),
      start_visits_(structure.layer_size(0), 0.0),
      counts_(structure.pair_count(), 0.0),
      snapshot_(structure.pair_count(), 0.0),
      transition_counts_(structure.row_storage(), 0.0) {
    if (!(log_term > 0.0) || !std::isfinite(log_term)) throw InvalidInput("confidence log term must be positive");
    center_ = uniform_kernel(structure);
    radius_.initial.assign(center_.initial.size(), kUnrestricted);
    radius_.rows.assign(center_.rows.size(), kUnrestricted);
}

ConfidenceSet ConfidenceSet::singleton(const LayeredStructure& structure, const TransitionKernel& kernel) {
    TransitionKernel zero{std::vector<double>(kernel.initial.size(), 0.0), std::vector<double>(kernel.rows.size(), 0.0)};
    return from_parts(structure, kernel, std::move(zero));
}

ConfidenceSet ConfidenceSet::from_parts(const LayeredStructure& structure, TransitionKernel center,
                                        TransitionKernel radius) {
    validate_kernel(structure, center, 1e-9);
    if (radius.initial.size() != center.initial.size() || radius.rows.size() != center.rows.size()) {
        throw InvalidInput("radius layout does not match the kernel");
    }
    for (double r : radius.initial) {
        if (!(r >= 0.0)) throw InvalidInput("radii must be non-negative");
    }
    for (double r : radius.rows) {
        if (!(r >= 0.0)) throw InvalidInput("radii must be non-negative");
    }
    ConfidenceSet set(structure, 1.0);
    set.center_ = std::move(center);
    set.radius_ = std::move(radius);
    return set;
}

double ConfidenceSet::radius_formula(double pbar, double n, double log_term) {
    const double denom = std::max(1.0, n - 1.0);
    return 4.0 * std::sqrt(pbar * log_term / denom) + 28.0 * log_term / (3.0 * denom);
}

RowBox ConfidenceSet::row_box(std::size_t state, std::size_t action) const {
    const std::size_t offset = structure_.row_offset(state, action);
    const std::size_t len = structure_.row_length(state);
    return {std::span<const double>(center_.rows).subspan(offset, len),
            std::span<const double>(radius_.rows).subspan(offset, len)};
}

bool ConfidenceSet::update(const EpisodePath& path) {
    if (path.states.size() != structure_.horizon() || path.actions.size() != structure_.horizon()) {
        throw InvalidInput("trajectory length does not match the horizon");
    }
    start_count_ += 1.0;
    start_visits_[path.states[0] - structure_.layer_begin(0)] += 1.0;
    bool fire = start_count_ >= std::max(1.0, 2.0 * start_snapshot_);
    for (std::size_t h = 0; h < path.states.size(); ++h) {
        const std::size_t s = path.states[h];
        const std::size_t a = path.actions[h];
        if (structure_.layer_of(s) != h || a >= structure_.actions()) throw InvalidInput("malformed trajectory");
        const std::size_t pair = structure_.pair_index(s, a);
        counts_[pair] += 1.0;
        if (h + 1 < path.states.size()) {
            transition_counts_[structure_.row_offset(s, a) + path.states[h + 1] - structure_.layer_begin(h + 1)] += 1.0;
        }
        if (counts_[pair] >= std::max(1.0, 2.0 * snapshot_[pair])) fire = true;
    }
    if (fire) {
        ++epoch_;
        start_snapshot_ = start_count_;
        snapshot_ = counts_;
        refresh();
    }
    return fire;
}

void ConfidenceSet::refresh() {
    const std::size_t first = structure_.layer_size(0);
    if (start_count_ > 0.0) {
        for (std::size_t j = 0; j < first; ++j) {
            center_.initial[j] = start_visits_[j] / start_count_;
            radius_.initial[j] = radius_formula(center_.initial[j], start_count_, log_term_);
        }
    }
    for (std::size_t s = 0; s < structure_.state_count(); ++s) {
        if (!structure_.has_row(s)) continue;
        const std::size_t len = structure_.row_length(s);
        for (std::size_t a = 0; a < structure_.actions(); ++a) {
            const double n = counts_[structure_.pair_index(s, a)];
            const std::size_t offset = structure_.row_offset(s, a);
            for (std::size_t j = 0; j < len; ++j) {
                if (n > 0.0) {
                    center_.rows[offset + j] = transition_counts_[offset + j] / n;
                    radius_.rows[offset + j] = radius_formula(center_.rows[offset + j], n, log_term_);
                } else {
                    center_.rows[offset + j] = 1.0 / static_cast<double>(len);
                    radius_.rows[offset + j] = kUnrestricted;
                }
            }
        }
    }
}

bool ConfidenceSet::contains(const TransitionKernel& kernel, double slack) const {
    auto inside = [slack](const RowBox& box, std::span<const double> row) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (row[j] < box.lower(j) - slack || row[j] > box.upper(j) + slack) return false;
        }
        return true;
    };
    if (kernel.initial.size() != center_.initial.size() || kernel.rows.size() != center_.rows.size()) return false;
    if (!inside(start_box(), kernel.initial)) return false;
    for (std::size_t s = 0; s < structure_.state_count(); ++s) {
        if (!structure_.has_row(s)) continue;
        for (std::size_t a = 0; a < structure_.actions(); ++a) {
            const std::span<const double> row(kernel.rows.data() + structure_.row_offset(s, a),
                                              structure_.row_length(s));
            if (!inside(row_box(s, a), row)) return false;
        }
    }
    return true;
}

std::vector<double> argmax_over_box(const RowBox& box, std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<double> p(n);
    double low_total = 0.0;
    double high_total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        p[j] = box.lower(j);
        low_total += p[j];
        high_total += box.upper(j);
    }
    if (low_total > 1.0 + kBoxSlack || high_total < 1.0 - kBoxSlack) {
        throw NumericalError("confidence box does not meet the simplex");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    double remaining = 1.0 - low_total;
    for (std::size_t j : order) {
        if (remaining <= 0.0) break;
        const double add = std::min(box.upper(j) - p[j], remaining);
        p[j] += add;
        remaining -= add;
    }
    return p;
}

double max_over_box(const RowBox& box, std::span<const double> values) {
    const std::vector<double> p = argmax_over_box(box, values);
    double total = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) total += p[j] * values[j];
    return total;
}

double comp_uob(const Policy& policy, std::size_t target, const ConfidenceSet& set) {
    const LayeredStructure& st = set.structure();
    if (target >= st.state_count()) throw InvalidInput("target state out of range");
    if (policy.states() != st.state_count() || policy.actions() != st.actions()) {
        throw InvalidInput("policy shape does not match the confidence set");
    }
    const std::size_t target_layer = st.layer_of(target);
    // value[j] over the current layer, starting at the target's layer
    std::vector<double> value(st.layer_size(target_layer), 0.0);
    value[target - st.layer_begin(target_layer)] = 1.0;
    for (std::size_t h = target_layer; h-- > 0;) {
        std::vector<double> prev(st.layer_size(h), 0.0);
        for (std::size_t s = st.layer_begin(h); s < st.layer_end(h); ++s) {
            double v = 0.0;
            for (std::size_t a = 0; a < st.actions(); ++a) {
                const double w = policy(s, a);
                if (w == 0.0) continue;
                v += w * max_over_box(set.row_box(s, a), value);
            }
            prev[s - st.layer_begin(h)] = v;
        }
        value = std::move(prev);
    }
    return max_over_box(set.start_box(), value);
}

double comp_uob(const Policy& policy, std::size_t state, std::size_t action, const ConfidenceSet& set) {
    return policy(state, action) * comp_uob(policy, state, set);
}

}  // namespace scalefree
