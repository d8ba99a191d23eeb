#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scalefree/rng.hpp"
#include "scalefree/scale_clip.hpp"
#include "scalefree/simplex_ftrl.hpp"

namespace scalefree {

enum class BanditAlgorithm {
    scb,
    scb_ix,
    exp3_ix_known_scale,
    tsallis_inf_known_scale,
};

std::string_view to_string(BanditAlgorithm algorithm);
BanditAlgorithm parse_bandit_algorithm(std::string_view name);

// How the clipping threshold evolves. `doubling` is the C_{t+1} = 2 C_t rule
// of earlier clipping methods, kept only as an ablation; it needs a positive
// initial threshold and is not scale-free.
enum class ThresholdRule { scale_clip, doubling };

// Loss generator for the bandit game. Sees the round index and the arms the
// learner played so far, never the learner's distribution.
class Adversary {
public:
    virtual ~Adversary() = default;
    virtual std::size_t arms() const = 0;
    virtual std::vector<double> losses(std::size_t round, std::span<const std::size_t> history) = 0;
};

struct BanditOptions {
    // Loss magnitude bound handed to the known-scale baselines.
    double known_scale = 1.0;
    ThresholdRule threshold_rule = ThresholdRule::scale_clip;
    double initial_threshold = 0.0;
};

struct BanditAlgState {
    BanditAlgorithm algorithm = BanditAlgorithm::scb;
    BanditOptions options;
    std::vector<double> cumulative;
    ClipState clip;
    RandomStream rng;
    std::vector<std::size_t> history;
};

BanditAlgState make_bandit_state(BanditAlgorithm algorithm, std::size_t arms, std::uint64_t seed,
                                 const BanditOptions& options = {});

struct RoundRecord {
    std::size_t round = 0;
    std::size_t arm = 0;
    double loss = 0.0;
    double clipped = 0.0;
    double threshold_before = 0.0;
    double threshold_after = 0.0;
    double eta = 0.0;  // +inf while unbounded
    double beta = 0.0;
    double gamma = 0.0;
    double estimate = 0.0;  // estimator entry at the played arm
    std::vector<double> distribution;
};

// One iteration of SCB: Tsallis FTRL, uniform mixing, inverse-CDF draw with
// `uniform`, clip, importance-weighted estimate, threshold update.
RoundRecord scb_round(BanditAlgState& state, Adversary& adversary, double uniform);
RoundRecord scb_round(BanditAlgState& state, Adversary& adversary);

// SCB-IX: Shannon FTRL and the implicit-exploration estimator.
RoundRecord scbix_round(BanditAlgState& state, Adversary& adversary, double uniform);
RoundRecord scbix_round(BanditAlgState& state, Adversary& adversary);

// Dispatches on state.algorithm (baselines included).
RoundRecord bandit_round(BanditAlgState& state, Adversary& adversary);

struct BanditRun {
    std::vector<RoundRecord> records;
    std::vector<std::vector<double>> losses;  // full loss vector per round
};

BanditRun run(BanditAlgorithm algorithm, Adversary& adversary, std::size_t horizon, std::uint64_t seed,
              const BanditOptions& options = {});

struct BestArm {
    std::size_t arm = 0;
    double total = 0.0;
};

// Exact argmin of column sums; ties go to the lowest index.
BestArm best_fixed_arm(const std::vector<std::vector<double>>& losses);

}  // namespace scalefree
