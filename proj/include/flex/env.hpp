#ifndef FLEX_ENV_HPP
#define FLEX_ENV_HPP

#include <cstdint>
#include <vector>

#include "flex/instance.hpp"
#include "flex/oracle.hpp"

namespace flex {

// add_noop: every action names an arc; naming a present arc does nothing.
// add_delete_noop: naming a present arc deletes it (installation cost
// refunded), and one extra action index is an explicit no-op.
enum class ActionSet { add_noop, add_delete_noop };

struct MdpConfig {
    ActionSet action_set = ActionSet::add_noop;
    int omega = 50;                        // samples behind the terminal reward
    bool variance_reduction = true;        // subtract P(d, all-ones) per sample
    int horizon = 1;                       // K; equals the instance budget
    bool fresh_samples_per_episode = true; // draw terminal samples from the episode RNG
    std::uint64_t seed = 0;
    const SampleSet* fixed_samples = nullptr; // used when fresh_samples_per_episode is false
};

struct MdpState {
    FlexNetwork network;
    int step = 0;
};

struct Transition {
    MdpState state;
    int action = 0;
    double reward = 0.0;
    MdpState next_state;
    bool done = false;
};

// Finite-horizon MDP over partial networks: the agent spends exactly K steps
// editing the empty network; arc edits cost (or refund) the installation
// price immediately, and the final transition additionally carries the
// sample-average profit of the finished network.
class Mdp {
public:
    Mdp(const Instance& inst, MdpConfig cfg);

    // Starts an episode: empty network, step 0. In fresh-sample mode the
    // terminal-reward demand samples are drawn here from episode_seed.
    MdpState reset(std::uint64_t episode_seed);

    Transition step(const MdpState& state, int action);

    int observation_dim() const { return inst_->m * inst_->n + 1; }
    int action_dim() const;
    int noop_action() const; // valid only for add_delete_noop

    // flattened 0/1 network followed by the remaining-horizon fraction (K-t)/K
    void observe(const MdpState& state, std::vector<double>& out) const;

    const SampleSet& episode_samples() const;
    const MdpConfig& config() const { return cfg_; }

private:
    const Instance* inst_;
    MdpConfig cfg_;
    SampleSet fresh_samples_;
};

} // namespace flex

#endif
