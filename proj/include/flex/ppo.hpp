#ifndef FLEX_PPO_HPP
#define FLEX_PPO_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "flex/env.hpp"
#include "flex/instance.hpp"
#include "flex/nn.hpp"

namespace flex {

struct PpoConfig {
    double gamma = 0.99;
    double lambda = 0.999; // GAE
    double clip_ratio = 0.2;
    double policy_lr = 3e-4;
    double value_lr = 1e-3;
    int policy_iters = 80;
    int value_iters = 80;
    double target_kl = 0.01;
    int episodes_per_epoch = 800;
    long early_stop_steps = 48000; // stop after this many env steps without a better eval
    long max_steps = 100000000;
    std::vector<int> hidden = {1024, 128};
    int eval_samples = 5000; // fixed demand samples scoring the per-epoch design
    int eval_rollouts = 8;   // sampled designs scored per epoch besides the argmax decode
    // Rescale a freshly initialized value head to the first batch's
    // return statistics; without it the regression spends many epochs just
    // reaching the target magnitude.
    bool calibrate_value = true;
    std::uint64_t seed = 0;
};

// One episode: fixed length K, value bootstrap at the terminal state is 0.
struct Trajectory {
    std::vector<std::vector<double>> observations;
    std::vector<int> actions;
    std::vector<double> rewards;
    std::vector<double> logps;  // behavior-policy log probs
    std::vector<double> values; // V(s_t) predictions
    std::vector<double> rewards_to_go;
    std::vector<double> advantages;
    FlexNetwork final_network;

    double episode_return() const {
        double r = 0.0;
        for (double x : rewards) r += x;
        return r;
    }
};

struct EpochRow {
    long step = 0;
    int epoch = 0;
    double mean_return = 0.0;
    double value_loss = 0.0;
    double approx_kl = 0.0;
    double clip_frac = 0.0;
    double eval_profit = 0.0;
    double wallclock_s = 0.0;
};

struct TrainReport {
    std::vector<EpochRow> rows;

    // wallclock_s is the one non-deterministic column; determinism checks
    // compare the CSV with it excluded
    void to_csv(std::ostream& out, bool include_wallclock = true) const;
    std::string to_csv_string(bool include_wallclock = true) const;
};

// R_t = sum_{t' >= t} gamma^{t'-t} r_{t'} by backward recursion.
std::vector<double> compute_rewards_to_go(const std::vector<double>& rewards, double gamma);

// GAE: delta_t = r_t + gamma V_{t+1} - V_t with V_K = 0; A_t = sum (gamma
// lambda)^l delta_{t+l}.
std::vector<double> compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                                double gamma, double lambda);

// The clipping function: (1+eps)A for A >= 0, (1-eps)A otherwise.
double clip_g(double eps, double adv);

// Mean over all (tau, t) of min(ratio * adv, g(eps, adv)) under `policy`,
// using the trajectories' stored behavior log probs and raw advantages.
// Equals the mean advantage when policy still equals the behavior policy.
double clipped_surrogate(const MlpParams& policy, const std::vector<Trajectory>& trajs,
                         double clip_ratio);

// Gradient of the clipped surrogate at `policy`, using the trajectories' raw
// advantages (no normalization). At the behavior policy this equals the
// vanilla policy-gradient estimate mean_t A_t grad log pi(a_t | s_t).
Gradient surrogate_gradient(const MlpParams& policy, const std::vector<Trajectory>& trajs,
                            double clip_ratio);

struct UpdateStats {
    int policy_iters_executed = 0;
    int value_iters_executed = 0;
    double approx_kl = 0.0; // last measured
    double clip_frac = 0.0;
    double value_loss = 0.0;
    std::vector<double> kl_trace; // KL measured at the start of each policy iteration
};

// One PPO-Clip update on a collected batch: up to policy_iters ascent steps on
// the clipped surrogate, gated by approximate KL, then value_iters descent
// steps on the squared value residual. Advantages are normalized per batch.
// Optimizer state is fresh per call (each epoch solves its own surrogate
// problem, and warm moments would couple them).
UpdateStats ppo_update(std::vector<Trajectory>& trajs, MlpParams& policy, MlpParams& value,
                       const PpoConfig& cfg);

// Rolls out `episodes` episodes under the current policy. Episode RNG streams
// are derived from (cfg.seed, batch_index, episode), so results do not depend
// on scheduling. Returns trajectories with rewards-to-go and GAE filled in.
std::vector<Trajectory> collect_batch(const Instance& inst, const MdpConfig& mdp_cfg,
                                      const MlpParams& policy, const MlpParams& value,
                                      const PpoConfig& cfg, long batch_index, int episodes);

// Argmax-decoded episode (ties toward the lowest action index).
FlexNetwork greedy_decode(const Instance& inst, const MdpConfig& mdp_cfg, const MlpParams& policy);

// Sets the value head's bias to the batch mean return and scales its weights
// by the return standard deviation. Applied once to fresh value networks.
void calibrate_value_head(MlpParams& value, const std::vector<Trajectory>& trajs);

struct TrainResult {
    MlpParams policy;
    MlpParams value;
    TrainReport report;
    long total_steps = 0;
    double best_eval = 0.0;
    long best_eval_step = 0;
    FlexNetwork best_network; // argmax decode at the best-eval epoch
};

// Full training loop: collect -> update -> evaluate each epoch, stopping at
// max_steps or when the best evaluation has not improved for
// early_stop_steps environment steps. Fully reproducible given cfg.seed.
// init_policy/init_value, when given, replace the fresh initialization
// (meta-learning adaptation starts here).
TrainResult train(const Instance& inst, MdpConfig mdp_cfg, const PpoConfig& cfg,
                  const MlpParams* init_policy = nullptr, const MlpParams* init_value = nullptr);

struct DesignCandidate {
    FlexNetwork network;
    double score = 0.0;
};

struct ExtractResult {
    FlexNetwork best;
    double best_score = 0.0;
    std::vector<DesignCandidate> candidates; // deduped, in first-seen order
};

// Rolls out `count` stochastic episodes, dedupes the final networks and
// scores each on the shared sample set; returns the argmax (first seen wins
// ties).
ExtractResult extract_designs(const MlpParams& policy, const Instance& inst,
                              const MdpConfig& mdp_cfg, int count, const SampleSet& eval_set);

namespace seed_tags {
inline constexpr std::uint64_t kRollout = 0xA1;
inline constexpr std::uint64_t kEval = 0xE7;
inline constexpr std::uint64_t kExtract = 0x5E;
inline constexpr std::uint64_t kEvalRollout = 0xE8;
inline constexpr std::uint64_t kPolicyInit = 0x11;
inline constexpr std::uint64_t kValueInit = 0x12;
} // namespace seed_tags

} // namespace flex

#endif
