#include "flex/env.hpp"

#include "flex/errors.hpp"
#include "flex/rng.hpp"

namespace flex {

Mdp::Mdp(const Instance& inst, MdpConfig cfg) : inst_(&inst), cfg_(cfg) {
    if (cfg_.horizon < 1) throw ValidationError("horizon", "horizon must be >= 1");
    if (cfg_.omega < 1) throw ValidationError("omega", "omega must be >= 1");
    if (!cfg_.fresh_samples_per_episode) {
        if (cfg_.fixed_samples == nullptr)
            throw ValidationError("fixed_samples", "fixed-sample mode needs a sample set");
        if (cfg_.fixed_samples->count() < cfg_.omega)
            throw ValidationError("fixed_samples", "sample set smaller than omega");
    }
}

int Mdp::action_dim() const {
    const int arcs = inst_->m * inst_->n;
    return cfg_.action_set == ActionSet::add_delete_noop ? arcs + 1 : arcs;
}

int Mdp::noop_action() const { return inst_->m * inst_->n; }

MdpState Mdp::reset(std::uint64_t episode_seed) {
    if (cfg_.fresh_samples_per_episode)
        fresh_samples_ = sample_demand(inst_->demand, episode_seed, cfg_.omega);
    MdpState s;
    s.network = FlexNetwork(inst_->m, inst_->n);
    s.step = 0;
    return s;
}

const SampleSet& Mdp::episode_samples() const {
    return cfg_.fresh_samples_per_episode ? fresh_samples_ : *cfg_.fixed_samples;
}

Transition Mdp::step(const MdpState& state, int action) {
    if (state.step >= cfg_.horizon)
        throw ValidationError("step", "episode is already finished");
    if (action < 0 || action >= action_dim())
        throw ValidationError("action", "action index out of range");

    Transition t;
    t.state = state;
    t.action = action;
    t.next_state = state;
    t.next_state.step = state.step + 1;
    t.reward = 0.0;

    const bool is_noop = cfg_.action_set == ActionSet::add_delete_noop && action == noop_action();
    if (!is_noop) {
        const int i = action / inst_->n;
        const int j = action % inst_->n;
        if (!state.network.has(i, j)) {
            t.next_state.network.add(i, j);
            t.reward = -inst_->arc_cost(i, j);
        } else if (cfg_.action_set == ActionSet::add_delete_noop) {
            t.next_state.network.remove(i, j);
            t.reward = inst_->arc_cost(i, j); // refund keeps the return identity
        }
    }

    t.done = t.next_state.step == cfg_.horizon;
    if (t.done) {
        EstimatorConfig est;
        est.omega = cfg_.omega;
        est.variance_reduction = cfg_.variance_reduction;
        t.reward += estimate_expected_profit(*inst_, t.next_state.network, episode_samples(), est);
    }
    return t;
}

void Mdp::observe(const MdpState& state, std::vector<double>& out) const {
    const std::size_t cells = static_cast<std::size_t>(inst_->m) * inst_->n;
    out.resize(cells + 1);
    for (std::size_t k = 0; k < cells; ++k) out[k] = state.network.arcs[k] ? 1.0 : 0.0;
    out[cells] = static_cast<double>(cfg_.horizon - state.step) / static_cast<double>(cfg_.horizon);
}

} // namespace flex
