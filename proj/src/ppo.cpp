#include "flex/ppo.hpp"
#include <limits>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include "flex/errors.hpp"
#include "flex/parallel.hpp"
#include "flex/rng.hpp"

namespace flex {

std::vector<double> compute_rewards_to_go(const std::vector<double>& rewards, double gamma) {
    std::vector<double> rtg(rewards.size());
    double acc = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) {
        acc = rewards[t] + gamma * acc;
        rtg[t] = acc;
    }
    return rtg;
}

std::vector<double> compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                                double gamma, double lambda) {
    if (rewards.size() != values.size())
        throw ValidationError("values", "values must align with rewards (terminal value is implicit 0)");
    std::vector<double> adv(rewards.size());
    double acc = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) {
        const double next_v = t + 1 < values.size() ? values[t + 1] : 0.0;
        const double delta = rewards[t] + gamma * next_v - values[t];
        acc = delta + gamma * lambda * acc;
        adv[t] = acc;
    }
    return adv;
}

double clip_g(double eps, double adv) { return adv >= 0.0 ? (1.0 + eps) * adv : (1.0 - eps) * adv; }

namespace {

int sample_categorical(const std::vector<double>& probs, double u) {
    double acc = 0.0;
    for (std::size_t a = 0; a < probs.size(); ++a) {
        acc += probs[a];
        if (u < acc) return static_cast<int>(a);
    }
    return static_cast<int>(probs.size()) - 1;
}

int argmax_index(const std::vector<double>& xs) {
    int best = 0;
    for (std::size_t k = 1; k < xs.size(); ++k)
        if (xs[k] > xs[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    return best;
}

struct FlatBatch {
    std::vector<const std::vector<double>*> obs;
    std::vector<int> actions;
    std::vector<double> logp_old;
    std::vector<double> adv_norm;
    std::vector<double> rtg;
};

FlatBatch flatten_batch(const std::vector<Trajectory>& trajs, bool normalize_adv) {
    FlatBatch b;
    std::size_t total = 0;
    for (const auto& t : trajs) total += t.actions.size();
    b.obs.reserve(total);
    b.actions.reserve(total);
    b.logp_old.reserve(total);
    b.adv_norm.reserve(total);
    b.rtg.reserve(total);
    for (const auto& t : trajs)
        for (std::size_t k = 0; k < t.actions.size(); ++k) {
            b.obs.push_back(&t.observations[k]);
            b.actions.push_back(t.actions[k]);
            b.logp_old.push_back(t.logps[k]);
            b.adv_norm.push_back(t.advantages[k]);
            b.rtg.push_back(t.rewards_to_go[k]);
        }
    if (!normalize_adv) return b;
    // per-batch normalization to zero mean / unit variance
    double mean = 0.0;
    for (double a : b.adv_norm) mean += a;
    mean /= static_cast<double>(b.adv_norm.size());
    double var = 0.0;
    for (double a : b.adv_norm) var += (a - mean) * (a - mean);
    var /= static_cast<double>(b.adv_norm.size());
    const double inv = 1.0 / (std::sqrt(var) + 1e-8);
    for (double& a : b.adv_norm) a = (a - mean) * inv;
    return b;
}

// per-chunk gradient accumulators merged in chunk order keep the update
// independent of the worker count
constexpr int kGradChunks = 16;

struct PolicyPassResult {
    double kl = 0.0;
    double clip_frac = 0.0;
    double surrogate = 0.0;
};

PolicyPassResult policy_pass(const FlatBatch& b, const MlpParams& policy, double clip_ratio,
                             Gradient* grad_out) {
    const int n = static_cast<int>(b.obs.size());
    const int chunks = std::min(kGradChunks, n);
    const int step = (n + chunks - 1) / chunks;
    std::vector<Gradient> grads;
    std::vector<double> kl_part(static_cast<std::size_t>(chunks), 0.0);
    std::vector<double> clip_part(static_cast<std::size_t>(chunks), 0.0);
    std::vector<double> sur_part(static_cast<std::size_t>(chunks), 0.0);
    if (grad_out)
        grads.assign(static_cast<std::size_t>(chunks), zero_gradient(policy));

    parallel_for(chunks, [&](int c) {
        const int lo = c * step;
        const int hi = std::min(n, lo + step);
        ForwardCache cache;
        std::vector<double> cot;
        double kl = 0.0, clipped = 0.0, sur = 0.0;
        for (int s = lo; s < hi; ++s) {
            const auto& obs = *b.obs[static_cast<std::size_t>(s)];
            const std::vector<double>& logits = forward_cached(policy, obs, cache);
            const std::vector<double> ls = log_softmax(logits);
            const int a = b.actions[static_cast<std::size_t>(s)];
            const double lpn = ls[static_cast<std::size_t>(a)];
            const double lpo = b.logp_old[static_cast<std::size_t>(s)];
            const double adv = b.adv_norm[static_cast<std::size_t>(s)];
            kl += lpo - lpn;
            const double ratio = std::exp(lpn - lpo);
            const double unclipped = ratio * adv;
            const double clip_val = clip_g(clip_ratio, adv);
            sur += std::min(unclipped, clip_val);
            if (clip_val < unclipped) {
                clipped += 1.0; // min picked the clipped branch: zero gradient
                continue;
            }
            if (grad_out) {
                // d/dlogits of ratio*adv = ratio*adv * (e_a - softmax)
                cot.resize(ls.size());
                const double coef = unclipped / static_cast<double>(n);
                for (std::size_t k = 0; k < ls.size(); ++k) cot[k] = -coef * std::exp(ls[k]);
                cot[static_cast<std::size_t>(a)] += coef;
                backward_cached(policy, cache, cot, grads[static_cast<std::size_t>(c)]);
            }
        }
        kl_part[static_cast<std::size_t>(c)] = kl;
        clip_part[static_cast<std::size_t>(c)] = clipped;
        sur_part[static_cast<std::size_t>(c)] = sur;
    });

    PolicyPassResult res;
    for (int c = 0; c < chunks; ++c) {
        res.kl += kl_part[static_cast<std::size_t>(c)];
        res.clip_frac += clip_part[static_cast<std::size_t>(c)];
        res.surrogate += sur_part[static_cast<std::size_t>(c)];
    }
    res.kl /= static_cast<double>(n);
    res.clip_frac /= static_cast<double>(n);
    res.surrogate /= static_cast<double>(n);
    if (grad_out) {
        *grad_out = zero_gradient(policy);
        for (int c = 0; c < chunks; ++c) {
            for (std::size_t l = 0; l < grad_out->layers.size(); ++l) {
                auto& dst = grad_out->layers[l];
                const auto& src = grads[static_cast<std::size_t>(c)].layers[l];
                for (std::size_t k = 0; k < dst.w.data.size(); ++k) dst.w.data[k] += src.w.data[k];
                for (std::size_t k = 0; k < dst.b.size(); ++k) dst.b[k] += src.b[k];
            }
        }
    }
    return res;
}

double value_pass(const FlatBatch& b, const MlpParams& value, Gradient* grad_out) {
    const int n = static_cast<int>(b.obs.size());
    const int chunks = std::min(kGradChunks, n);
    const int step = (n + chunks - 1) / chunks;
    std::vector<Gradient> grads;
    std::vector<double> loss_part(static_cast<std::size_t>(chunks), 0.0);
    if (grad_out)
        grads.assign(static_cast<std::size_t>(chunks), zero_gradient(value));

    parallel_for(chunks, [&](int c) {
        const int lo = c * step;
        const int hi = std::min(n, lo + step);
        ForwardCache cache;
        double loss = 0.0;
        double cot[1];
        for (int s = lo; s < hi; ++s) {
            const auto& obs = *b.obs[static_cast<std::size_t>(s)];
            const double v = forward_cached(value, obs, cache)[0];
            const double err = v - b.rtg[static_cast<std::size_t>(s)];
            loss += err * err;
            if (grad_out) {
                cot[0] = 2.0 * err / static_cast<double>(n);
                backward_cached(value, cache, std::span<const double>(cot, 1),
                                grads[static_cast<std::size_t>(c)]);
            }
        }
        loss_part[static_cast<std::size_t>(c)] = loss;
    });

    double loss = 0.0;
    for (int c = 0; c < chunks; ++c) loss += loss_part[static_cast<std::size_t>(c)];
    loss /= static_cast<double>(n);
    if (grad_out) {
        *grad_out = zero_gradient(value);
        for (int c = 0; c < chunks; ++c) {
            for (std::size_t l = 0; l < grad_out->layers.size(); ++l) {
                auto& dst = grad_out->layers[l];
                const auto& src = grads[static_cast<std::size_t>(c)].layers[l];
                for (std::size_t k = 0; k < dst.w.data.size(); ++k) dst.w.data[k] += src.w.data[k];
                for (std::size_t k = 0; k < dst.b.size(); ++k) dst.b[k] += src.b[k];
            }
        }
    }
    return loss;
}

void negate(Gradient& g) {
    for (auto& l : g.layers) {
        for (auto& v : l.w.data) v = -v;
        for (auto& v : l.b) v = -v;
    }
}

bool finite(const Gradient& g) {
    for (const auto& l : g.layers) {
        for (double v : l.w.data)
            if (!std::isfinite(v)) return false;
        for (double v : l.b)
            if (!std::isfinite(v)) return false;
    }
    return true;
}

} // namespace

double clipped_surrogate(const MlpParams& policy, const std::vector<Trajectory>& trajs,
                         double clip_ratio) {
    double sum = 0.0;
    long n = 0;
    ForwardCache cache;
    for (const auto& t : trajs) {
        for (std::size_t k = 0; k < t.actions.size(); ++k) {
            const std::vector<double>& logits = forward_cached(policy, t.observations[k], cache);
            const std::vector<double> ls = log_softmax(logits);
            const double ratio = std::exp(ls[static_cast<std::size_t>(t.actions[k])] - t.logps[k]);
            sum += std::min(ratio * t.advantages[k], clip_g(clip_ratio, t.advantages[k]));
            ++n;
        }
    }
    return sum / static_cast<double>(n);
}


Gradient surrogate_gradient(const MlpParams& policy, const std::vector<Trajectory>& trajs,
                            double clip_ratio) {
    FlatBatch batch = flatten_batch(trajs, false);
    Gradient grad = zero_gradient(policy);
    policy_pass(batch, policy, clip_ratio, &grad);
    return grad;
}

UpdateStats ppo_update(std::vector<Trajectory>& trajs, MlpParams& policy, MlpParams& value,
                       const PpoConfig& cfg) {
    if (trajs.empty()) throw ValidationError("trajectories", "empty batch");
    FlatBatch batch = flatten_batch(trajs, true);
    UpdateStats stats;

    AdamState policy_adam = make_adam_state(policy);
    Gradient grad = zero_gradient(policy);
    for (int iter = 0; iter < cfg.policy_iters; ++iter) {
        PolicyPassResult pass = policy_pass(batch, policy, cfg.clip_ratio, &grad);
        stats.kl_trace.push_back(pass.kl);
        stats.approx_kl = pass.kl;
        stats.clip_frac = pass.clip_frac;
        if (!std::isfinite(pass.surrogate) || !finite(grad))
            throw NumericalError("non-finite policy loss or gradient");
        if (pass.kl > cfg.target_kl) break; // measured before stepping: no step past the gate
        negate(grad);                       // ascend the surrogate
        adam_step(policy, grad, policy_adam, cfg.policy_lr);
        ++stats.policy_iters_executed;
    }

    AdamState value_adam = make_adam_state(value);
    Gradient vgrad = zero_gradient(value);
    for (int iter = 0; iter < cfg.value_iters; ++iter) {
        stats.value_loss = value_pass(batch, value, &vgrad);
        if (!std::isfinite(stats.value_loss) || !finite(vgrad))
            throw NumericalError("non-finite value loss or gradient");
        adam_step(value, vgrad, value_adam, cfg.value_lr);
        ++stats.value_iters_executed;
    }
    stats.value_loss = value_pass(batch, value, nullptr);
    return stats;
}

std::vector<Trajectory> collect_batch(const Instance& inst, const MdpConfig& mdp_cfg,
                                      const MlpParams& policy, const MlpParams& value,
                                      const PpoConfig& cfg, long batch_index, int episodes) {
    std::vector<Trajectory> trajs(static_cast<std::size_t>(episodes));
    const std::uint64_t batch_seed =
        Rng::mix(Rng::mix(cfg.seed, seed_tags::kRollout), static_cast<std::uint64_t>(batch_index));
    parallel_chunks(episodes, [&](int lo, int hi) {
        Mdp env(inst, mdp_cfg);
        ForwardCache pcache, vcache;
        std::vector<double> obs;
        for (int e = lo; e < hi; ++e) {
            Rng rng(Rng::mix(batch_seed, static_cast<std::uint64_t>(e)));
            Trajectory& t = trajs[static_cast<std::size_t>(e)];
            MdpState state = env.reset(rng.next_u64());
            const int horizon = mdp_cfg.horizon;
            t.observations.reserve(static_cast<std::size_t>(horizon));
            while (state.step < horizon) {
                env.observe(state, obs);
                const std::vector<double>& logits = forward_cached(policy, obs, pcache);
                const std::vector<double> ls = log_softmax(logits);
                std::vector<double> probs(ls.size());
                for (std::size_t k = 0; k < ls.size(); ++k) probs[k] = std::exp(ls[k]);
                const int a = sample_categorical(probs, rng.next_double());
                const double v = forward_cached(value, obs, vcache)[0];
                Transition tr = env.step(state, a);
                t.observations.push_back(obs);
                t.actions.push_back(a);
                t.logps.push_back(ls[static_cast<std::size_t>(a)]);
                t.values.push_back(v);
                t.rewards.push_back(tr.reward);
                state = tr.next_state;
            }
            t.final_network = state.network;
            t.rewards_to_go = compute_rewards_to_go(t.rewards, cfg.gamma);
            t.advantages = compute_gae(t.rewards, t.values, cfg.gamma, cfg.lambda);
        }
    });
    return trajs;
}

void calibrate_value_head(MlpParams& value, const std::vector<Trajectory>& trajs) {
    double mean = 0.0, count = 0.0;
    for (const auto& t : trajs)
        for (double r : t.rewards_to_go) {
            mean += r;
            count += 1.0;
        }
    if (count == 0.0) return;
    mean /= count;
    double var = 0.0;
    for (const auto& t : trajs)
        for (double r : t.rewards_to_go) var += (r - mean) * (r - mean);
    const double sd = std::max(1.0, std::sqrt(var / count));
    MlpLayer& last = value.layers.back();
    for (double& w : last.w.data) w *= sd;
    last.b.back() = mean;
}

FlexNetwork greedy_decode(const Instance& inst, const MdpConfig& mdp_cfg, const MlpParams& policy) {
    Mdp env(inst, mdp_cfg);
    ForwardCache cache;
    std::vector<double> obs;
    MdpState state = env.reset(0);
    while (state.step < mdp_cfg.horizon) {
        env.observe(state, obs);
        const std::vector<double>& logits = forward_cached(policy, obs, cache);
        state = env.step(state, argmax_index(logits)).next_state;
    }
    return state.network;
}

void TrainReport::to_csv(std::ostream& out, bool include_wallclock) const {
    out << "step,epoch,mean_return,value_loss,approx_kl,clip_frac,eval_profit";
    if (include_wallclock) out << ",wallclock_s";
    out << '\n';
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ',' << buf;
    };
    for (const auto& r : rows) {
        out << r.step << ',' << r.epoch;
        put(r.mean_return);
        put(r.value_loss);
        put(r.approx_kl);
        put(r.clip_frac);
        put(r.eval_profit);
        if (include_wallclock) put(r.wallclock_s);
        out << '\n';
    }
}

std::string TrainReport::to_csv_string(bool include_wallclock) const {
    std::ostringstream ss;
    to_csv(ss, include_wallclock);
    return ss.str();
}

TrainResult train(const Instance& inst, MdpConfig mdp_cfg, const PpoConfig& cfg,
                  const MlpParams* init_policy, const MlpParams* init_value) {
    mdp_cfg.horizon = inst.budget;
    Mdp probe(inst, mdp_cfg);
    const int obs_dim = probe.observation_dim();
    const int act_dim = probe.action_dim();

    TrainResult res;
    bool fresh_value = false;
    if (init_policy != nullptr && init_value != nullptr) {
        res.policy = *init_policy;
        res.value = *init_value;
    } else {
        fresh_value = true;
        std::vector<int> pdims{obs_dim};
        for (int h : cfg.hidden) pdims.push_back(h);
        pdims.push_back(act_dim);
        std::vector<int> vdims{obs_dim};
        for (int h : cfg.hidden) vdims.push_back(h);
        vdims.push_back(1);
        Rng prng(Rng::mix(cfg.seed, seed_tags::kPolicyInit));
        Rng vrng(Rng::mix(cfg.seed, seed_tags::kValueInit));
        res.policy = make_mlp(pdims, prng, 1.0, 0.01);
        res.value = make_mlp(vdims, vrng, 1.0, 1.0);
    }

    const SampleSet eval_set =
        sample_demand(inst.demand, Rng::mix(cfg.seed, seed_tags::kEval), cfg.eval_samples);

    res.best_eval = -std::numeric_limits<double>::infinity();
    res.best_eval_step = 0;
    const auto t0 = std::chrono::steady_clock::now();
    long batch_index = 0;
    for (int epoch = 0; res.total_steps < cfg.max_steps; ++epoch) {
        std::vector<Trajectory> trajs = collect_batch(inst, mdp_cfg, res.policy, res.value, cfg,
                                                      batch_index++, cfg.episodes_per_epoch);
        res.total_steps += static_cast<long>(cfg.episodes_per_epoch) * mdp_cfg.horizon;
        double mean_return = 0.0;
        for (const auto& t : trajs) mean_return += t.episode_return();
        mean_return /= static_cast<double>(trajs.size());

        if (epoch == 0 && fresh_value && cfg.calibrate_value)
            calibrate_value_head(res.value, trajs);
        UpdateStats stats = ppo_update(trajs, res.policy, res.value, cfg);

        // per-epoch evaluation: the argmax decode plus a few sampled designs,
        // best one scored on the fixed sample set
        std::vector<FlexNetwork> eval_nets;
        eval_nets.push_back(greedy_decode(inst, mdp_cfg, res.policy));
        {
            Mdp env(inst, mdp_cfg);
            ForwardCache cache;
            std::vector<double> obs;
            const std::uint64_t eval_seed =
                Rng::mix(Rng::mix(cfg.seed, seed_tags::kEvalRollout), static_cast<std::uint64_t>(epoch));
            for (int e = 0; e < cfg.eval_rollouts; ++e) {
                Rng rng(Rng::mix(eval_seed, static_cast<std::uint64_t>(e)));
                MdpState state = env.reset(rng.next_u64());
                while (state.step < mdp_cfg.horizon) {
                    env.observe(state, obs);
                    const std::vector<double>& logits = forward_cached(res.policy, obs, cache);
                    const std::vector<double> probs = softmax(logits);
                    state = env.step(state, sample_categorical(probs, rng.next_double())).next_state;
                }
                eval_nets.push_back(state.network);
            }
        }
        double eval_profit = -std::numeric_limits<double>::infinity();
        FlexNetwork eval_best;
        for (const auto& net : eval_nets) {
            const double score = fdp_objective_estimate(inst, net, eval_set, eval_set.count());
            if (score > eval_profit) {
                eval_profit = score;
                eval_best = net;
            }
        }
        if (eval_profit > res.best_eval) {
            res.best_eval = eval_profit;
            res.best_eval_step = res.total_steps;
            res.best_network = eval_best;
        }

        EpochRow row;
        row.step = res.total_steps;
        row.epoch = epoch;
        row.mean_return = mean_return;
        row.value_loss = stats.value_loss;
        row.approx_kl = stats.approx_kl;
        row.clip_frac = stats.clip_frac;
        row.eval_profit = eval_profit;
        row.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.report.rows.push_back(row);

        if (res.total_steps - res.best_eval_step >= cfg.early_stop_steps) break;
    }
    return res;
}

ExtractResult extract_designs(const MlpParams& policy, const Instance& inst,
                              const MdpConfig& mdp_cfg, int count, const SampleSet& eval_set) {
    if (count < 1) throw ValidationError("count", "need at least one rollout");
    std::vector<FlexNetwork> finals(static_cast<std::size_t>(count));
    const std::uint64_t base = Rng::mix(mdp_cfg.seed, seed_tags::kExtract);
    parallel_chunks(count, [&](int lo, int hi) {
        Mdp env(inst, mdp_cfg);
        ForwardCache cache;
        std::vector<double> obs;
        for (int e = lo; e < hi; ++e) {
            Rng rng(Rng::mix(base, static_cast<std::uint64_t>(e)));
            MdpState state = env.reset(rng.next_u64());
            while (state.step < mdp_cfg.horizon) {
                env.observe(state, obs);
                const std::vector<double>& logits = forward_cached(policy, obs, cache);
                const std::vector<double> probs = softmax(logits);
                state = env.step(state, sample_categorical(probs, rng.next_double())).next_state;
            }
            finals[static_cast<std::size_t>(e)] = state.network;
        }
    });

    ExtractResult res;
    std::map<std::vector<std::uint8_t>, std::size_t> seen;
    for (auto& f : finals) {
        if (seen.emplace(f.arcs, res.candidates.size()).second)
            res.candidates.push_back({std::move(f), 0.0});
    }
    std::vector<double> scores(res.candidates.size());
    parallel_for(static_cast<int>(res.candidates.size()), [&](int k) {
        scores[static_cast<std::size_t>(k)] = fdp_objective_estimate(
            inst, res.candidates[static_cast<std::size_t>(k)].network, eval_set, eval_set.count());
    });
    res.best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < res.candidates.size(); ++k) {
        res.candidates[k].score = scores[k];
        if (scores[k] > res.best_score) {
            res.best_score = scores[k];
            res.best = res.candidates[k].network;
        }
    }
    return res;
}

} // namespace flex
