#include "scalefree/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scalefree/errors.hpp"

namespace scalefree {

LayeredStructure::LayeredStructure(std::vector<std::size_t> layer_sizes, std::size_t actions)
    : sizes_(std::move(layer_sizes)), actions_(actions) {
    if (sizes_.empty()) throw InvalidInput("an MDP needs at least one layer");
    if (actions_ == 0) throw InvalidInput("an MDP needs at least one action");
    for (std::size_t h = 0; h < sizes_.size(); ++h) {
        if (sizes_[h] == 0) throw InvalidInput("layer " + std::to_string(h) + " is empty");
        begin_.push_back(begin_.back() + sizes_[h]);
        layer_.insert(layer_.end(), sizes_[h], h);
    }
    for (std::size_t s = 0; s < state_count(); ++s) {
        row_begin_.push_back(row_begin_.back() + actions_ * row_length(s));
    }
}

TransitionKernel uniform_kernel(const LayeredStructure& structure) {
    TransitionKernel kernel;
    kernel.initial.assign(structure.layer_size(0), 1.0 / static_cast<double>(structure.layer_size(0)));
    kernel.rows.resize(structure.row_storage());
    for (std::size_t s = 0; s < structure.state_count(); ++s) {
        const std::size_t len = structure.row_length(s);
        for (std::size_t a = 0; a < structure.actions(); ++a) {
            std::fill_n(kernel.rows.begin() + structure.row_offset(s, a), len, 1.0 / static_cast<double>(len));
        }
    }
    return kernel;
}

namespace {

void check_distribution(std::span<const double> row, double tolerance, const std::string& what) {
    double total = 0.0;
    for (double v : row) {
        if (!std::isfinite(v) || v < 0.0) throw InvalidInput(what + " has a negative or non-finite entry");
        total += v;
    }
    if (std::abs(total - 1.0) > tolerance) {
        throw InvalidInput(what + " sums to " + std::to_string(total) + ", not 1");
    }
}

}  // namespace

void validate_kernel(const LayeredStructure& structure, const TransitionKernel& kernel, double tolerance) {
    if (kernel.initial.size() != structure.layer_size(0)) throw InvalidInput("initial distribution has wrong size");
    if (kernel.rows.size() != structure.row_storage()) throw InvalidInput("transition table has wrong size");
    check_distribution(kernel.initial, tolerance, "initial distribution");
    for (std::size_t s = 0; s < structure.state_count(); ++s) {
        if (!structure.has_row(s)) continue;
        for (std::size_t a = 0; a < structure.actions(); ++a) {
            check_distribution({kernel.rows.data() + structure.row_offset(s, a), structure.row_length(s)}, tolerance,
                               "transition row (" + std::to_string(s) + ", " + std::to_string(a) + ")");
        }
    }
}

LayeredMdp::LayeredMdp(LayeredStructure structure, TransitionKernel kernel)
    : structure_(std::move(structure)), kernel_(std::move(kernel)) {
    validate_kernel(structure_, kernel_);
}

bool LayeredMdp::has_equal_layers() const {
    const auto& sizes = structure_.layer_sizes();
    return std::all_of(sizes.begin(), sizes.end(), [&](std::size_t n) { return n == sizes.front(); });
}

Policy::Policy(std::size_t states, std::size_t actions, std::vector<double> probs)
    : states_(states), actions_(actions), probs_(std::move(probs)) {
    if (probs_.size() != states_ * actions_) throw InvalidInput("policy table has wrong size");
    for (std::size_t s = 0; s < states_; ++s) check_distribution(row(s), 1e-12, "policy row " + std::to_string(s));
}

Policy Policy::uniform(const LayeredStructure& structure) {
    const double p = 1.0 / static_cast<double>(structure.actions());
    return Policy(structure.state_count(), structure.actions(), std::vector<double>(structure.pair_count(), p));
}

Policy Policy::deterministic(const LayeredStructure& structure, std::span<const std::size_t> choice) {
    if (choice.size() != structure.state_count()) throw InvalidInput("one action per state required");
    std::vector<double> probs(structure.pair_count(), 0.0);
    for (std::size_t s = 0; s < choice.size(); ++s) {
        if (choice[s] >= structure.actions()) throw InvalidInput("action index out of range");
        probs[structure.pair_index(s, choice[s])] = 1.0;
    }
    return Policy(structure.state_count(), structure.actions(), std::move(probs));
}

double OccupancyMeasure::state_mass(const LayeredStructure& structure, std::size_t state) const {
    double mass = 0.0;
    for (std::size_t a = 0; a < structure.actions(); ++a) mass += pairs[structure.pair_index(state, a)];
    return mass;
}

double occupancy_violation(const LayeredStructure& structure, const OccupancyMeasure& q) {
    if (q.initial.size() != structure.layer_size(0) || q.pairs.size() != structure.pair_count() ||
        q.transitions.size() != structure.row_storage()) {
        return std::numeric_limits<double>::infinity();
    }
    double worst = 0.0;
    auto note = [&](double v) { worst = std::max(worst, std::isfinite(v) ? std::abs(v) : INFINITY); };
    for (double v : q.initial) note(std::min(v, 0.0));
    for (double v : q.pairs) note(std::min(v, 0.0));
    for (double v : q.transitions) note(std::min(v, 0.0));

    double initial_mass = 0.0;
    for (double v : q.initial) initial_mass += v;
    note(initial_mass - 1.0);

    const std::size_t actions = structure.actions();
    std::vector<double> inflow(structure.state_count(), 0.0);
    for (std::size_t j = 0; j < structure.layer_size(0); ++j) inflow[j] = q.initial[j];
    for (std::size_t s = 0; s < structure.state_count(); ++s) {
        if (!structure.has_row(s)) continue;
        const std::size_t next_begin = structure.layer_begin(structure.layer_of(s) + 1);
        for (std::size_t a = 0; a < actions; ++a) {
            double row_total = 0.0;
            const std::size_t offset = structure.row_offset(s, a);
            for (std::size_t j = 0; j < structure.row_length(s); ++j) {
                row_total += q.transitions[offset + j];
                inflow[next_begin + j] += q.transitions[offset + j];
            }
            note(row_total - q.pairs[structure.pair_index(s, a)]);
        }
    }
    for (std::size_t h = 0; h < structure.horizon(); ++h) {
        double layer_mass = 0.0;
        for (std::size_t s = structure.layer_begin(h); s < structure.layer_end(h); ++s) {
            const double mass = q.state_mass(structure, s);
            layer_mass += mass;
            note(mass - inflow[s]);
        }
        note(layer_mass - 1.0);
    }
    return worst;
}

void validate_occupancy(const LayeredStructure& structure, const OccupancyMeasure& q, double tolerance) {
    const double violation = occupancy_violation(structure, q);
    if (!(violation <= tolerance)) {
        throw NumericalError("occupancy measure violates flow/mass constraints by " + std::to_string(violation));
    }
}

OccupancyMeasure occupancy_of_policy(const LayeredStructure& structure, const TransitionKernel& kernel,
                                     const Policy& policy) {
    const std::size_t actions = structure.actions();
    OccupancyMeasure q;
    q.initial = kernel.initial;
    q.pairs.assign(structure.pair_count(), 0.0);
    q.transitions.assign(structure.row_storage(), 0.0);

    std::vector<double> mass(structure.state_count(), 0.0);
    std::copy(kernel.initial.begin(), kernel.initial.end(), mass.begin());
    for (std::size_t s = 0; s < structure.state_count(); ++s) {
        for (std::size_t a = 0; a < actions; ++a) {
            const double pair = mass[s] * policy(s, a);
            q.pairs[structure.pair_index(s, a)] = pair;
            if (!structure.has_row(s)) continue;
            const std::size_t offset = structure.row_offset(s, a);
            const std::size_t next_begin = structure.layer_begin(structure.layer_of(s) + 1);
            for (std::size_t j = 0; j < structure.row_length(s); ++j) {
                const double flow = pair * kernel.rows[offset + j];
                q.transitions[offset + j] = flow;
                mass[next_begin + j] += flow;
            }
        }
    }
    validate_occupancy(structure, q);
    return q;
}

OccupancyMeasure occupancy_of_policy(const LayeredMdp& mdp, const Policy& policy) {
    return occupancy_of_policy(mdp.structure(), mdp.kernel(), policy);
}

Policy policy_of_occupancy(const LayeredStructure& structure, const OccupancyMeasure& q) {
    const std::size_t actions = structure.actions();
    std::vector<double> probs(structure.pair_count());
    for (std::size_t s = 0; s < structure.state_count(); ++s) {
        double mass = 0.0;
        for (std::size_t a = 0; a < actions; ++a) mass += std::max(q.pairs[structure.pair_index(s, a)], 0.0);
        for (std::size_t a = 0; a < actions; ++a) {
            probs[structure.pair_index(s, a)] = mass > 0.0
                                                    ? std::max(q.pairs[structure.pair_index(s, a)], 0.0) / mass
                                                    : 1.0 / static_cast<double>(actions);
        }
    }
    return Policy(structure.state_count(), actions, std::move(probs));
}

TransitionKernel induced_kernel(const LayeredStructure& structure, const OccupancyMeasure& q) {
    TransitionKernel kernel;
    kernel.initial = q.initial;
    kernel.rows.assign(structure.row_storage(), 0.0);
    for (std::size_t s = 0; s < structure.state_count(); ++s) {
        const std::size_t len = structure.row_length(s);
        for (std::size_t a = 0; a < structure.actions() && len > 0; ++a) {
            const std::size_t offset = structure.row_offset(s, a);
            double total = 0.0;
            for (std::size_t j = 0; j < len; ++j) total += std::max(q.transitions[offset + j], 0.0);
            for (std::size_t j = 0; j < len; ++j) {
                kernel.rows[offset + j] = total > 0.0 ? std::max(q.transitions[offset + j], 0.0) / total
                                                      : 1.0 / static_cast<double>(len);
            }
        }
    }
    return kernel;
}

double inner_product(const OccupancyMeasure& q, std::span<const double> losses) {
    double total = 0.0;
    for (std::size_t i = 0; i < q.pairs.size(); ++i) total += q.pairs[i] * losses[i];
    return total;
}

double policy_loss(const LayeredMdp& mdp, const Policy& policy, std::span<const double> losses) {
    const auto& structure = mdp.structure();
    std::vector<double> value(structure.state_count(), 0.0);
    for (std::size_t s = structure.state_count(); s-- > 0;) {
        double v = 0.0;
        for (std::size_t a = 0; a < structure.actions(); ++a) {
            double continuation = 0.0;
            if (structure.has_row(s)) {
                const auto row = mdp.transition(s, a);
                const std::size_t next_begin = structure.layer_begin(structure.layer_of(s) + 1);
                for (std::size_t j = 0; j < row.size(); ++j) continuation += row[j] * value[next_begin + j];
            }
            v += policy(s, a) * (losses[structure.pair_index(s, a)] + continuation);
        }
        value[s] = v;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < structure.layer_size(0); ++j) total += mdp.initial()[j] * value[j];
    return total;
}

Trajectory sample_trajectory(const LayeredMdp& mdp, const Policy& policy, std::span<const double> losses,
                             RandomStream& rng) {
    const auto& structure = mdp.structure();
    Trajectory trajectory;
    trajectory.reserve(structure.horizon());
    std::size_t state = rng.sample(mdp.initial());
    for (std::size_t h = 0; h < structure.horizon(); ++h) {
        const std::size_t action = rng.sample(policy.row(state));
        trajectory.push_back({state, action, losses[structure.pair_index(state, action)]});
        if (!structure.has_row(state)) break;
        state = structure.layer_begin(h + 1) + rng.sample(mdp.transition(state, action));
    }
    return trajectory;
}

HindsightOptimum best_occupancy_in_hindsight(const LayeredMdp& mdp, std::span<const double> loss_sum) {
    const auto& structure = mdp.structure();
    if (loss_sum.size() != structure.pair_count()) throw InvalidInput("loss table has wrong size");
    std::vector<double> value(structure.state_count(), 0.0);
    std::vector<std::size_t> choice(structure.state_count(), 0);
    for (std::size_t s = structure.state_count(); s-- > 0;) {
        double best = INFINITY;
        for (std::size_t a = 0; a < structure.actions(); ++a) {
            double q = loss_sum[structure.pair_index(s, a)];
            if (structure.has_row(s)) {
                const auto row = mdp.transition(s, a);
                const std::size_t next_begin = structure.layer_begin(structure.layer_of(s) + 1);
                for (std::size_t j = 0; j < row.size(); ++j) q += row[j] * value[next_begin + j];
            }
            if (q < best) {
                best = q;
                choice[s] = a;
            }
        }
        value[s] = best;
    }
    HindsightOptimum result;
    result.policy = Policy::deterministic(structure, choice);
    result.occupancy = occupancy_of_policy(mdp, result.policy);
    for (std::size_t j = 0; j < structure.layer_size(0); ++j) result.value += mdp.initial()[j] * value[j];
    return result;
}

double max_reach_probability(const LayeredMdp& mdp, std::size_t target) {
    const auto& structure = mdp.structure();
    if (target >= structure.state_count()) throw InvalidInput("target state out of range");
    const std::size_t target_layer = structure.layer_of(target);
    std::vector<double> value(structure.state_count(), 0.0);
    value[target] = 1.0;
    for (std::size_t h = target_layer; h-- > 0;) {
        for (std::size_t s = structure.layer_begin(h); s < structure.layer_end(h); ++s) {
            double best = 0.0;
            const std::size_t next_begin = structure.layer_begin(h + 1);
            for (std::size_t a = 0; a < structure.actions(); ++a) {
                const auto row = mdp.transition(s, a);
                double v = 0.0;
                for (std::size_t j = 0; j < row.size(); ++j) v += row[j] * value[next_begin + j];
                best = std::max(best, v);
            }
            value[s] = best;
        }
    }
    double total = 0.0;
    for (std::size_t j = 0; j < structure.layer_size(0); ++j) total += mdp.initial()[j] * value[j];
    return total;
}

std::size_t MdpSimulator::reset() { return rng_.sample(mdp_.initial()); }

std::size_t MdpSimulator::step(std::size_t state, std::size_t action) {
    const auto& structure = mdp_.structure();
    if (!structure.has_row(state)) return structure.terminal();
    return structure.layer_begin(structure.layer_of(state) + 1) + rng_.sample(mdp_.transition(state, action));
}

EpisodePath run_episode(EpisodicSimulator& simulator, const Policy& policy, RandomStream& action_rng) {
    const auto& structure = simulator.structure();
    EpisodePath path;
    path.states.reserve(structure.horizon());
    path.actions.reserve(structure.horizon());
    std::size_t state = simulator.reset();
    while (state != structure.terminal()) {
        const std::size_t action = action_rng.sample(policy.row(state));
        path.states.push_back(state);
        path.actions.push_back(action);
        state = simulator.step(state, action);
    }
    return path;
}

}  // namespace scalefree
