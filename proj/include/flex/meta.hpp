#ifndef FLEX_META_HPP
#define FLEX_META_HPP

#include <cstdint>
#include <vector>

#include "flex/ppo.hpp"

namespace flex {

// A family of FDP tasks sharing one instance template and differing in the
// arc budget K.
struct TaskSpec {
    Instance instance;         // template; budget is overridden per task
    std::vector<int> k_values; // task distribution p(T)
    int adaptation_steps = 1;  // inner PPO updates before the post-adaptation batch
    double inner_lr = 0.0;     // > 0 overrides the policy lr inside the inner loop
                               // (value lr keeps the configured ratio)
    double meta_lr = 1.0;
    int meta_epochs = 100;
    int task_batch = 0; // 0 = use every task each meta-epoch
    std::uint64_t seed = 0;
};

struct MetaResult {
    MlpParams policy;
    MlpParams value;
    TrainReport report;
    long total_steps = 0;
};

// First-order meta step: move toward the mean of the per-task adapted
// parameters,  params += meta_lr * (mean_i task_params_i - params).
// meta_lr = 1 with a single task assigns that task's parameters exactly.
void meta_update(MlpParams& params, const std::vector<MlpParams>& task_params, double meta_lr);

// First-order meta-training over budgets: per meta-epoch and task, clone the
// meta parameters, run `adaptation_steps` PPO updates on the task, collect a
// post-adaptation batch, update once more on it, then apply meta_update with
// the per-task results (policy and value network both).
MetaResult meta_train(const TaskSpec& spec, const PpoConfig& ppo_cfg, const MdpConfig& mdp_base);

// Standard PPO training on the target budget, initialized from the meta
// parameters instead of a fresh init.
TrainResult adapt(const MlpParams& meta_policy, const MlpParams& meta_value, Instance inst,
                  int target_k, MdpConfig mdp_cfg, const PpoConfig& ppo_cfg);

} // namespace flex

#endif
