#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "scalefree/bandit.hpp"
#include "scalefree/mdp.hpp"
#include "scalefree/scb_rl.hpp"

namespace scalefree {

// A scale jump: from round `at` on, losses are multiplied by `factor`
// (factors compound).
struct ScaleJump {
    std::size_t at = 0;
    double factor = 1.0;
};

// Every bandit environment draws a base loss vector from its own stream and
// multiplies it by `scale` (times active jump factors), so two environments
// that differ only in `scale` produce exactly proportional losses.
struct BanditEnvironmentSpec {
    std::string name = "stochastic-bernoulli-scaled";
    std::vector<double> means{0.0, 0.5};
    double scale = 1.0;
    double sigma = 1.0;             // stochastic-gaussian noise
    std::vector<ScaleJump> jumps;   // scale-shift
    double tail_index = 1.5;        // heavy-tail-truncated
    double cap = 20.0;              // heavy-tail-truncated
    std::size_t window = 0;         // adaptive-best-response; 0 = whole history
};

const std::vector<std::string>& bandit_environment_names();

// Throws InvalidInput for unknown names or bad parameters.
std::unique_ptr<Adversary> make_bandit_environment(const BanditEnvironmentSpec& spec, std::uint64_t seed);

// Random layered MDP. Profiles:
//   dense       rows drawn from Dirichlet(concentration)
//   sparse      each row supported on `support` random next states
//   unreachable dense, but the last state of every layer after the first gets
//               no incoming mass (and layer 0's last state no initial mass)
struct MdpInstanceSpec {
    std::vector<std::size_t> layers{2, 2};
    std::size_t actions = 2;
    std::string profile = "dense";
    double concentration = 1.0;
    std::size_t support = 2;
};

const std::vector<std::string>& mdp_profile_names();
LayeredMdp make_random_mdp(const MdpInstanceSpec& spec, std::uint64_t instance_seed);

// MDP loss environments:
//   stochastic-bernoulli  ell(s,a) = scale * Bernoulli(mean(s,a))
//   stochastic-gaussian   ell(s,a) = scale * (mean(s,a) + sigma N(0,1))
//   scale-shift           Bernoulli losses with scale jumps
// Means are drawn once from Uniform[0,1] on the instance stream unless given.
struct MdpLossSpec {
    std::string name = "stochastic-bernoulli";
    std::vector<double> means;  // per pair; empty = random
    double scale = 1.0;
    double sigma = 0.5;
    std::vector<ScaleJump> jumps;
};

const std::vector<std::string>& mdp_environment_names();
std::unique_ptr<MdpAdversary> make_mdp_environment(const MdpLossSpec& spec, const LayeredStructure& structure,
                                                   std::uint64_t instance_seed, std::uint64_t seed);

}  // namespace scalefree
