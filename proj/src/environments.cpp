#include "scalefree/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scalefree/errors.hpp"

namespace scalefree {

namespace {

double jump_factor(const std::vector<ScaleJump>& jumps, std::size_t round) {
    double f = 1.0;
    for (const ScaleJump& j : jumps) {
        if (round >= j.at) f *= j.factor;
    }
    return f;
}

void check_jumps(const std::vector<ScaleJump>& jumps) {
    for (const ScaleJump& j : jumps) {
        if (!(j.factor > 0.0) || !std::isfinite(j.factor)) throw InvalidInput("scale jump factor must be positive");
        if (j.at < 1) throw InvalidInput("scale jumps start at round 1 or later");
    }
}

class BanditEnvironment final : public Adversary {
public:
    BanditEnvironment(BanditEnvironmentSpec spec, std::uint64_t seed)
        : spec_(std::move(spec)), rng_(seed, StreamKey::adversary) {}

    std::size_t arms() const override { return spec_.means.size(); }

    std::vector<double> losses(std::size_t round, std::span<const std::size_t> history) override {
        const std::vector<double> base = draw(history);
        const double factor = spec_.scale * jump_factor(spec_.jumps, round);
        std::vector<double> out(base.size());
        for (std::size_t k = 0; k < base.size(); ++k) out[k] = factor * base[k];
        return out;
    }

private:
    std::vector<double> draw(std::span<const std::size_t> history) {
        const std::size_t n = spec_.means.size();
        std::vector<double> base(n);
        const std::string& name = spec_.name;
        if (name == "stochastic-gaussian") {
            for (std::size_t k = 0; k < n; ++k) base[k] = spec_.means[k] + spec_.sigma * rng_.normal();
        } else if (name == "stochastic-bernoulli-scaled" || name == "scale-shift") {
            for (std::size_t k = 0; k < n; ++k) base[k] = rng_.uniform() < spec_.means[k] ? 1.0 : 0.0;
        } else if (name == "heavy-tail-truncated") {
            for (std::size_t k = 0; k < n; ++k) {
                const double pareto = std::pow(1.0 - rng_.uniform(), -1.0 / spec_.tail_index);
                base[k] = std::min(spec_.cap, spec_.means[k] * pareto);
            }
        } else {
            // adaptive-best-response: the arm played most often (in the window)
            // pays 1, everything else pays 0
            std::vector<std::size_t> counts(n, 0);
            const std::size_t from =
                spec_.window == 0 || history.size() <= spec_.window ? 0 : history.size() - spec_.window;
            for (std::size_t i = from; i < history.size(); ++i) ++counts[history[i]];
            const std::size_t target =
                static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
            base[target] = 1.0;
        }
        return base;
    }

    BanditEnvironmentSpec spec_;
    RandomStream rng_;
};

// Marsaglia-Tsang, with the alpha < 1 boost.
double gamma_draw(RandomStream& rng, double alpha) {
    if (alpha < 1.0) {
        const double u = 1.0 - rng.uniform();
        return gamma_draw(rng, alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = 1.0 - rng.uniform();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
}

std::vector<double> dirichlet(RandomStream& rng, std::size_t n, double alpha) {
    std::vector<double> p(n);
    double total = 0.0;
    for (double& x : p) {
        x = gamma_draw(rng, alpha);
        total += x;
    }
    if (!(total > 0.0)) {
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(n));
        return p;
    }
    for (double& x : p) x /= total;
    return p;
}

// Row over n entries: Dirichlet on `allowed` (first `allowed` entries, or a
// random subset of size `support` for the sparse profile).
std::vector<double> random_row(RandomStream& rng, std::size_t n, const MdpInstanceSpec& spec, bool drop_last) {
    std::vector<double> row(n, 0.0);
    const std::size_t usable = drop_last ? n - 1 : n;
    std::vector<std::size_t> idx(usable);
    std::iota(idx.begin(), idx.end(), 0);
    if (spec.profile == "sparse") {
        const std::size_t k = std::min(spec.support, usable);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(usable - i));
            std::swap(idx[i], idx[std::min(j, usable - 1)]);
        }
        idx.resize(k);
    }
    const std::vector<double> p = dirichlet(rng, idx.size(), spec.concentration);
    for (std::size_t i = 0; i < idx.size(); ++i) row[idx[i]] = p[i];
    return row;
}

class MdpLossEnvironment final : public MdpAdversary {
public:
    MdpLossEnvironment(MdpLossSpec spec, const LayeredStructure& structure, std::vector<double> means,
                       std::uint64_t seed)
        : spec_(std::move(spec)), structure_(structure), means_(std::move(means)), rng_(seed, StreamKey::adversary) {}

    const LayeredStructure& structure() const override { return structure_; }

    LossTable losses(std::size_t episode, std::span<const EpisodePath>) override {
        const double factor = spec_.scale * jump_factor(spec_.jumps, episode);
        LossTable out(means_.size());
        for (std::size_t p = 0; p < out.size(); ++p) {
            double base = 0.0;
            if (spec_.name == "stochastic-gaussian") {
                base = means_[p] + spec_.sigma * rng_.normal();
            } else {
                base = rng_.uniform() < means_[p] ? 1.0 : 0.0;
            }
            out[p] = factor * base;
        }
        return out;
    }

private:
    MdpLossSpec spec_;
    LayeredStructure structure_;
    std::vector<double> means_;
    RandomStream rng_;
};

}  // namespace

const std::vector<std::string>& bandit_environment_names() {
    static const std::vector<std::string> names{"stochastic-gaussian", "stochastic-bernoulli-scaled", "scale-shift",
                                                "heavy-tail-truncated", "adaptive-best-response"};
    return names;
}

std::unique_ptr<Adversary> make_bandit_environment(const BanditEnvironmentSpec& spec, std::uint64_t seed) {
    const auto& names = bandit_environment_names();
    if (std::find(names.begin(), names.end(), spec.name) == names.end()) {
        throw InvalidInput("unknown bandit environment '" + spec.name + "'");
    }
    if (spec.means.size() < 2) throw InvalidInput("a bandit environment needs at least two arms");
    if (!(spec.scale > 0.0) || !std::isfinite(spec.scale)) throw InvalidInput("scale must be positive");
    for (double m : spec.means) {
        if (!std::isfinite(m)) throw InvalidInput("arm means must be finite");
        if ((spec.name == "stochastic-bernoulli-scaled" || spec.name == "scale-shift") && !(m >= 0.0 && m <= 1.0)) {
            throw InvalidInput("Bernoulli means must lie in [0, 1]");
        }
    }
    if (!(spec.sigma >= 0.0)) throw InvalidInput("sigma must be non-negative");
    if (!(spec.tail_index > 0.0)) throw InvalidInput("tail index must be positive");
    if (!(spec.cap > 0.0)) throw InvalidInput("cap must be positive");
    check_jumps(spec.jumps);
    return std::make_unique<BanditEnvironment>(spec, seed);
}

const std::vector<std::string>& mdp_profile_names() {
    static const std::vector<std::string> names{"dense", "sparse", "unreachable"};
    return names;
}

LayeredMdp make_random_mdp(const MdpInstanceSpec& spec, std::uint64_t instance_seed) {
    const auto& names = mdp_profile_names();
    if (std::find(names.begin(), names.end(), spec.profile) == names.end()) {
        throw InvalidInput("unknown MDP profile '" + spec.profile + "'");
    }
    if (!(spec.concentration > 0.0)) throw InvalidInput("concentration must be positive");
    if (spec.profile == "sparse" && spec.support < 1) throw InvalidInput("sparse support must be at least 1");
    const bool drop = spec.profile == "unreachable";
    for (std::size_t n : spec.layers) {
        if (drop && n < 2) throw InvalidInput("the unreachable profile needs at least two states per layer");
    }
    LayeredStructure structure(spec.layers, spec.actions);
    RandomStream rng(instance_seed, StreamKey::instance);
    TransitionKernel kernel;
    kernel.initial = random_row(rng, structure.layer_size(0), spec, drop);
    kernel.rows.assign(structure.row_storage(), 0.0);
    for (std::size_t s = 0; s < structure.state_count(); ++s) {
        if (!structure.has_row(s)) continue;
        for (std::size_t a = 0; a < structure.actions(); ++a) {
            const std::vector<double> row = random_row(rng, structure.row_length(s), spec, drop);
            std::copy(row.begin(), row.end(), kernel.rows.begin() + static_cast<std::ptrdiff_t>(structure.row_offset(s, a)));
        }
    }
    return LayeredMdp(structure, std::move(kernel));
}

const std::vector<std::string>& mdp_environment_names() {
    static const std::vector<std::string> names{"stochastic-bernoulli", "stochastic-gaussian", "scale-shift"};
    return names;
}

std::unique_ptr<MdpAdversary> make_mdp_environment(const MdpLossSpec& spec, const LayeredStructure& structure,
                                                   std::uint64_t instance_seed, std::uint64_t seed) {
    const auto& names = mdp_environment_names();
    if (std::find(names.begin(), names.end(), spec.name) == names.end()) {
        throw InvalidInput("unknown MDP environment '" + spec.name + "'");
    }
    if (!(spec.scale > 0.0) || !std::isfinite(spec.scale)) throw InvalidInput("scale must be positive");
    if (!(spec.sigma >= 0.0)) throw InvalidInput("sigma must be non-negative");
    check_jumps(spec.jumps);
    std::vector<double> means = spec.means;
    if (means.empty()) {
        RandomStream rng(instance_seed, StreamKey::instance, 1);
        means.resize(structure.pair_count());
        for (double& m : means) m = rng.uniform();
    }
    if (means.size() != structure.pair_count()) throw InvalidInput("one mean per state-action pair is required");
    for (double m : means) {
        if (!(m >= 0.0 && m <= 1.0)) throw InvalidInput("loss means must lie in [0, 1]");
    }
    return std::make_unique<MdpLossEnvironment>(spec, structure, std::move(means), seed);
}

}  // namespace scalefree
