#include "flex/meta.hpp"
#include <chrono>

#include <cmath>

#include "flex/errors.hpp"
#include "flex/rng.hpp"

namespace flex {

namespace {
constexpr std::uint64_t kTagMetaTask = 0x3D;
}

void meta_update(MlpParams& params, const std::vector<MlpParams>& task_params, double meta_lr) {
    if (task_params.empty()) throw ValidationError("task_params", "no adapted parameters");
    MlpParams mean = task_params.front();
    for (std::size_t t = 1; t < task_params.size(); ++t)
        interpolate_params(mean, task_params[t], 1.0 / static_cast<double>(t + 1));
    interpolate_params(params, mean, meta_lr);
}

MetaResult meta_train(const TaskSpec& spec, const PpoConfig& ppo_cfg, const MdpConfig& mdp_base) {
    if (spec.k_values.empty()) throw ValidationError("k_values", "need at least one task");
    for (int k : spec.k_values)
        if (k < 1 || k > spec.instance.m * spec.instance.n)
            throw ValidationError("k_values", "budget outside [1, m*n]");
    if (spec.meta_epochs < 1) throw ValidationError("meta_epochs", "need at least one epoch");

    PpoConfig inner_cfg = ppo_cfg;
    if (spec.inner_lr > 0.0) {
        const double ratio = ppo_cfg.value_lr / ppo_cfg.policy_lr;
        inner_cfg.policy_lr = spec.inner_lr;
        inner_cfg.value_lr = spec.inner_lr * ratio;
    }

    // same initialization path as ppo::train so a single task with zero
    // adaptation steps and meta_lr 1 reproduces it exactly
    Instance probe_inst = spec.instance;
    probe_inst.budget = spec.k_values.front();
    MdpConfig probe_cfg = mdp_base;
    probe_cfg.horizon = probe_inst.budget;
    Mdp probe(probe_inst, probe_cfg);
    std::vector<int> pdims{probe.observation_dim()};
    for (int h : ppo_cfg.hidden) pdims.push_back(h);
    pdims.push_back(probe.action_dim());
    std::vector<int> vdims{probe.observation_dim()};
    for (int h : ppo_cfg.hidden) vdims.push_back(h);
    vdims.push_back(1);
    Rng prng(Rng::mix(ppo_cfg.seed, seed_tags::kPolicyInit));
    Rng vrng(Rng::mix(ppo_cfg.seed, seed_tags::kValueInit));

    MetaResult res;
    res.policy = make_mlp(pdims, prng, 1.0, 0.01);
    res.value = make_mlp(vdims, vrng, 1.0, 1.0);

    Rng task_rng(Rng::mix(spec.seed, kTagMetaTask));
    long batch_index = 0;
    bool value_calibrated = !ppo_cfg.calibrate_value;
    const auto t0 = std::chrono::steady_clock::now();

    for (int epoch = 0; epoch < spec.meta_epochs; ++epoch) {
        std::vector<int> tasks;
        if (spec.task_batch <= 0 || spec.task_batch >= static_cast<int>(spec.k_values.size())) {
            tasks.resize(spec.k_values.size());
            for (std::size_t t = 0; t < tasks.size(); ++t) tasks[t] = static_cast<int>(t);
        } else {
            for (int t = 0; t < spec.task_batch; ++t)
                tasks.push_back(static_cast<int>(task_rng.next_below(spec.k_values.size())));
        }

        std::vector<MlpParams> adapted_policies, adapted_values;
        double mean_return = 0.0;
        double value_loss = 0.0, kl = 0.0, clip_frac = 0.0;
        for (int t : tasks) {
            Instance inst = spec.instance;
            inst.budget = spec.k_values[static_cast<std::size_t>(t)];
            MdpConfig mdp_cfg = mdp_base;
            mdp_cfg.horizon = inst.budget;

            MlpParams task_policy = res.policy;
            MlpParams task_value = res.value;
            // the very first batch calibrates the meta value head, exactly as a
            // fresh ppo::train run would on its first epoch
            auto maybe_calibrate = [&](const std::vector<Trajectory>& batch) {
                if (value_calibrated) return;
                calibrate_value_head(res.value, batch);
                task_value = res.value;
                value_calibrated = true;
            };
            for (int a = 0; a < spec.adaptation_steps; ++a) {
                auto trajs = collect_batch(inst, mdp_cfg, task_policy, task_value, inner_cfg,
                                           batch_index++, inner_cfg.episodes_per_epoch);
                res.total_steps += static_cast<long>(inner_cfg.episodes_per_epoch) * inst.budget;
                maybe_calibrate(trajs);
                ppo_update(trajs, task_policy, task_value, inner_cfg);
            }
            auto post = collect_batch(inst, mdp_cfg, task_policy, task_value, inner_cfg,
                                      batch_index++, inner_cfg.episodes_per_epoch);
            res.total_steps += static_cast<long>(inner_cfg.episodes_per_epoch) * inst.budget;
            maybe_calibrate(post);
            UpdateStats st = ppo_update(post, task_policy, task_value, inner_cfg);

            for (const auto& tr : post) mean_return += tr.episode_return();
            value_loss += st.value_loss;
            kl += st.approx_kl;
            clip_frac += st.clip_frac;
            adapted_policies.push_back(std::move(task_policy));
            adapted_values.push_back(std::move(task_value));
        }
        meta_update(res.policy, adapted_policies, spec.meta_lr);
        meta_update(res.value, adapted_values, spec.meta_lr);

        const double tasks_n = static_cast<double>(tasks.size());
        EpochRow row;
        row.step = res.total_steps;
        row.epoch = epoch;
        row.mean_return = mean_return / (tasks_n * inner_cfg.episodes_per_epoch);
        row.value_loss = value_loss / tasks_n;
        row.approx_kl = kl / tasks_n;
        row.clip_frac = clip_frac / tasks_n;
        // meta eval: mean decoded objective across this epoch's tasks
        double eval = 0.0;
        for (int t : tasks) {
            Instance inst = spec.instance;
            inst.budget = spec.k_values[static_cast<std::size_t>(t)];
            MdpConfig mdp_cfg = mdp_base;
            mdp_cfg.horizon = inst.budget;
            const SampleSet eval_set = sample_demand(
                inst.demand, Rng::mix(ppo_cfg.seed, seed_tags::kEval), ppo_cfg.eval_samples);
            eval += fdp_objective_estimate(inst, greedy_decode(inst, mdp_cfg, res.policy), eval_set,
                                           eval_set.count());
        }
        row.eval_profit = eval / tasks_n;
        row.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.report.rows.push_back(row);
    }
    return res;
}

TrainResult adapt(const MlpParams& meta_policy, const MlpParams& meta_value, Instance inst,
                  int target_k, MdpConfig mdp_cfg, const PpoConfig& ppo_cfg) {
    if (target_k < 1 || target_k > inst.m * inst.n)
        throw ValidationError("target_k", "budget outside [1, m*n]");
    inst.budget = target_k;
    mdp_cfg.horizon = target_k;
    return train(inst, mdp_cfg, ppo_cfg, &meta_policy, &meta_value);
}

} // namespace flex
