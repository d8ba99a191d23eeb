#include "scalefree/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scalefree/errors.hpp"

namespace scalefree {

namespace {

std::vector<double> checked_losses(Adversary& adversary, std::size_t round, std::span<const std::size_t> history,
                                   std::size_t arms) {
    std::vector<double> losses = adversary.losses(round, history);
    if (losses.size() != arms) {
        throw EnvironmentError("adversary returned " + std::to_string(losses.size()) + " losses for " +
                               std::to_string(arms) + " arms");
    }
    for (double v : losses) {
        if (!std::isfinite(v)) throw EnvironmentError("adversary returned a non-finite loss");
    }
    return losses;
}

std::vector<double> mix_uniform(const ActionDistribution& p, double beta) {
    const double floor = beta / static_cast<double>(p.size());
    std::vector<double> q(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) q[k] = (1.0 - beta) * p[k] + floor;
    return q;
}

ClipState advance_threshold(const BanditAlgState& state, double loss) {
    if (state.options.threshold_rule == ThresholdRule::scale_clip) return update_threshold(loss, state.clip);
    ClipState next = state.clip;
    while (std::abs(loss) > next.threshold) next.threshold *= 2.0;
    next.round = state.clip.round + 1;
    return next;
}

// Shared tail of every round: observe, clip, estimate, update.
RoundRecord finish_round(BanditAlgState& state, Adversary& adversary, std::vector<double> q, double uniform,
                         double denominator_shift, double eta, double beta, double gamma) {
    const std::size_t arms = state.cumulative.size();
    RoundRecord record;
    record.round = state.clip.round;
    record.arm = RandomStream::sample_with(q, uniform);
    record.eta = eta;
    record.beta = beta;
    record.gamma = gamma;
    record.threshold_before = state.clip.threshold;

    const std::vector<double> losses = checked_losses(adversary, state.clip.round, state.history, arms);
    record.loss = losses[record.arm];
    record.clipped = clip(record.loss, state.clip);
    const std::vector<double> estimate =
        denominator_shift > 0.0
            ? estimate_ix(record.clipped, state.clip, record.arm, q[record.arm], denominator_shift, arms)
            : estimate_iw(record.clipped, state.clip, record.arm, q[record.arm], arms);
    record.estimate = estimate[record.arm];
    state.cumulative[record.arm] += record.estimate;

    state.clip = advance_threshold(state, record.loss);
    record.threshold_after = state.clip.threshold;
    state.history.push_back(record.arm);
    record.distribution = std::move(q);
    return record;
}

// Known-scale baselines map losses from [-L, L] to [0, 1] and run a standard
// bandit learner on that range.
RoundRecord known_scale_round(BanditAlgState& state, Adversary& adversary, double uniform) {
    const std::size_t arms = state.cumulative.size();
    const double n = static_cast<double>(arms);
    const double t = static_cast<double>(state.clip.round);
    const double scale = state.options.known_scale;
    const bool ix = state.algorithm == BanditAlgorithm::exp3_ix_known_scale;

    double eta = 0.0;
    double gamma = 0.0;
    ActionDistribution p;
    if (ix) {
        eta = std::sqrt(2.0 * std::log(n) / (n * t));
        gamma = eta / 2.0;
        p = solve_shannon(state.cumulative, LearningRate::finite(eta));
    } else {
        eta = 1.0 / std::sqrt(t);
        p = solve_tsallis(state.cumulative, LearningRate::finite(eta));
    }

    RoundRecord record;
    record.round = state.clip.round;
    record.arm = RandomStream::sample_with(p, uniform);
    record.eta = eta;
    record.gamma = gamma;
    record.threshold_before = scale;
    record.threshold_after = scale;
    const std::vector<double> losses = checked_losses(adversary, state.clip.round, state.history, arms);
    record.loss = losses[record.arm];
    record.clipped = std::max(-scale, std::min(scale, record.loss));
    const double normalized = (record.clipped / scale + 1.0) / 2.0;
    record.estimate = normalized / (p[record.arm] + gamma);
    state.cumulative[record.arm] += record.estimate;
    state.clip.round += 1;
    state.history.push_back(record.arm);
    record.distribution = std::move(p);
    return record;
}

class RecordingAdversary final : public Adversary {
public:
    RecordingAdversary(Adversary& inner, std::vector<std::vector<double>>& sink) : inner_(inner), sink_(sink) {}
    std::size_t arms() const override { return inner_.arms(); }
    std::vector<double> losses(std::size_t round, std::span<const std::size_t> history) override {
        std::vector<double> out = inner_.losses(round, history);
        sink_.push_back(out);
        return out;
    }

private:
    Adversary& inner_;
    std::vector<std::vector<double>>& sink_;
};

}  // namespace

std::string_view to_string(BanditAlgorithm algorithm) {
    switch (algorithm) {
        case BanditAlgorithm::scb: return "scb";
        case BanditAlgorithm::scb_ix: return "scb-ix";
        case BanditAlgorithm::exp3_ix_known_scale: return "exp3-ix";
        case BanditAlgorithm::tsallis_inf_known_scale: return "tsallis-inf";
    }
    return "unknown";
}

BanditAlgorithm parse_bandit_algorithm(std::string_view name) {
    if (name == "scb") return BanditAlgorithm::scb;
    if (name == "scb-ix") return BanditAlgorithm::scb_ix;
    if (name == "exp3-ix") return BanditAlgorithm::exp3_ix_known_scale;
    if (name == "tsallis-inf") return BanditAlgorithm::tsallis_inf_known_scale;
    throw InvalidInput("unknown bandit algorithm '" + std::string(name) + "'");
}

BanditAlgState make_bandit_state(BanditAlgorithm algorithm, std::size_t arms, std::uint64_t seed,
                                 const BanditOptions& options) {
    if (arms < 2) throw InvalidInput("a bandit needs at least two arms");
    if (options.threshold_rule == ThresholdRule::doubling && !(options.initial_threshold > 0.0)) {
        throw InvalidInput("the doubling threshold rule needs a positive initial threshold");
    }
    if (!(options.known_scale > 0.0)) throw InvalidInput("known scale must be positive");
    BanditAlgState state{algorithm, options, std::vector<double>(arms, 0.0), ClipState{},
                         RandomStream(seed, StreamKey::algorithm), {}};
    if (options.threshold_rule == ThresholdRule::doubling) state.clip.threshold = options.initial_threshold;
    return state;
}

RoundRecord scb_round(BanditAlgState& state, Adversary& adversary, double uniform) {
    const ScbRates rates = schedule_scb(state.clip, state.cumulative.size());
    const ActionDistribution p = solve_tsallis(state.cumulative, rates.eta);
    return finish_round(state, adversary, mix_uniform(p, rates.beta), uniform, 0.0, rates.eta.as_double(),
                        rates.beta, 0.0);
}

RoundRecord scb_round(BanditAlgState& state, Adversary& adversary) {
    return scb_round(state, adversary, state.rng.uniform());
}

RoundRecord scbix_round(BanditAlgState& state, Adversary& adversary, double uniform) {
    const ScbIxRates rates = schedule_scbix(state.clip, state.cumulative.size());
    const ActionDistribution p = solve_shannon(state.cumulative, rates.eta);
    RoundRecord record = finish_round(state, adversary, mix_uniform(p, rates.beta), uniform, rates.gamma,
                                      rates.eta.as_double(), rates.beta, rates.gamma);
    return record;
}

RoundRecord scbix_round(BanditAlgState& state, Adversary& adversary) {
    return scbix_round(state, adversary, state.rng.uniform());
}

RoundRecord bandit_round(BanditAlgState& state, Adversary& adversary) {
    switch (state.algorithm) {
        case BanditAlgorithm::scb: return scb_round(state, adversary);
        case BanditAlgorithm::scb_ix: return scbix_round(state, adversary);
        case BanditAlgorithm::exp3_ix_known_scale:
        case BanditAlgorithm::tsallis_inf_known_scale: return known_scale_round(state, adversary, state.rng.uniform());
    }
    throw InvalidInput("unknown bandit algorithm");
}

BanditRun run(BanditAlgorithm algorithm, Adversary& adversary, std::size_t horizon, std::uint64_t seed,
              const BanditOptions& options) {
    if (horizon < 1) throw InvalidInput("horizon must be at least 1");
    BanditAlgState state = make_bandit_state(algorithm, adversary.arms(), seed, options);
    BanditRun result;
    result.records.reserve(horizon);
    result.losses.reserve(horizon);
    RecordingAdversary recording(adversary, result.losses);
    for (std::size_t t = 0; t < horizon; ++t) result.records.push_back(bandit_round(state, recording));
    return result;
}

BestArm best_fixed_arm(const std::vector<std::vector<double>>& losses) {
    if (losses.empty()) throw InvalidInput("loss matrix is empty");
    const std::size_t arms = losses.front().size();
    std::vector<double> totals(arms, 0.0);
    for (const auto& row : losses) {
        if (row.size() != arms) throw InvalidInput("ragged loss matrix");
        for (std::size_t k = 0; k < arms; ++k) {
            if (!std::isfinite(row[k])) throw InvalidInput("loss matrix has a non-finite entry");
            totals[k] += row[k];
        }
    }
    BestArm best{0, totals[0]};
    for (std::size_t k = 1; k < arms; ++k) {
        if (totals[k] < best.total) best = {k, totals[k]};
    }
    return best;
}

}  // namespace scalefree
