#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "flex/meta.hpp"
#include "helpers.hpp"

using namespace flex;
using namespace flex::testing;

namespace {

Instance toy_2x2() {
    Instance inst;
    inst.m = inst.n = 2;
    inst.capacities = {1, 1};
    inst.demand = DemandModel::deterministic({1, 1});
    inst.unit_profit = Matrix(2, 2);
    inst.unit_profit(0, 0) = 4.0;
    inst.unit_profit(0, 1) = 1.0;
    inst.unit_profit(1, 0) = 1.0;
    inst.unit_profit(1, 1) = 3.0;
    inst.arc_cost = Matrix(2, 2, 0.0);
    inst.budget = 2;
    inst.validate();
    return inst;
}

PpoConfig tiny_cfg(std::uint64_t seed) {
    PpoConfig cfg;
    cfg.hidden = {16, 16};
    cfg.episodes_per_epoch = 64;
    cfg.policy_iters = 20;
    cfg.value_iters = 20;
    cfg.eval_samples = 16;
    cfg.gamma = 1.0;
    cfg.seed = seed;
    return cfg;
}

MdpConfig mdp_base() {
    MdpConfig cfg;
    cfg.omega = 4;
    cfg.variance_reduction = false;
    cfg.fresh_samples_per_episode = true;
    return cfg;
}

// budget-respecting brute force over networks with at most k arcs
double optimum_for(const Instance& inst, int k, const SampleSet& s) {
    double best = 0.0;
    const int cells = inst.m * inst.n;
    for (int mask = 0; mask < (1 << cells); ++mask) {
        if (__builtin_popcount(static_cast<unsigned>(mask)) > k) continue;
        FlexNetwork f(inst.m, inst.n);
        for (int c = 0; c < cells; ++c)
            if (mask & (1 << c)) f.add(c / inst.n, c % inst.n);
        best = std::max(best, fdp_objective_estimate(inst, f, s, s.count()));
    }
    return best;
}

long steps_to_reach(const TrainReport& report, double threshold) {
    for (const auto& row : report.rows)
        if (row.eval_profit >= threshold) return row.step;
    return -1;
}

} // namespace

TEST_CASE("meta_update: fixed point and averaging") {
    Rng rng(3);
    MlpParams base = make_mlp({3, 4, 2}, rng, 1.0, 1.0);

    SUBCASE("all adapted parameters equal the meta parameters: unchanged") {
        MlpParams p = base;
        meta_update(p, {base, base, base}, 0.7);
        CHECK(flatten(p) == flatten(base));
    }
    SUBCASE("meta_lr 1 with one task assigns that task's parameters exactly") {
        MlpParams p = base;
        MlpParams other = make_mlp({3, 4, 2}, rng, 1.0, 1.0);
        meta_update(p, {other}, 1.0);
        CHECK(flatten(p) == flatten(other));
    }
    SUBCASE("moves toward the mean of two tasks") {
        MlpParams p = base;
        MlpParams a = base, b = base;
        a.layers[0].w(0, 0) = 10.0;
        b.layers[0].w(0, 0) = -4.0;
        meta_update(p, {a, b}, 0.5);
        // mean of (10, -4) is 3; halfway from base toward 3
        CHECK(p.layers[0].w(0, 0) ==
              doctest::Approx(base.layers[0].w(0, 0) + 0.5 * (3.0 - base.layers[0].w(0, 0))));
    }
}

TEST_CASE("single task, zero adaptation steps, meta_lr 1 reduces to plain PPO") {
    Instance inst = toy_2x2();
    PpoConfig cfg = tiny_cfg(21);
    MdpConfig mdp = mdp_base();
    mdp.seed = 21;

    TaskSpec spec;
    spec.instance = inst;
    spec.k_values = {2};
    spec.adaptation_steps = 0;
    spec.meta_lr = 1.0;
    spec.meta_epochs = 3;
    spec.seed = 21;

    MetaResult meta = meta_train(spec, cfg, mdp);

    PpoConfig plain = cfg;
    plain.max_steps = 3L * cfg.episodes_per_epoch * inst.budget;
    plain.early_stop_steps = 1000000;
    MdpConfig mdp_plain = mdp;
    TrainResult ppo = train(inst, mdp_plain, plain);

    CHECK(flatten(meta.policy) == flatten(ppo.policy));
    CHECK(flatten(meta.value) == flatten(ppo.value));
    CHECK(meta.total_steps == ppo.total_steps);
}

TEST_CASE("adapt with a zero step budget returns the meta parameters unchanged") {
    Instance inst = toy_2x2();
    Rng rng(5);
    MlpParams policy = make_mlp({5, 16, 16, 4}, rng, 1.0, 0.01);
    MlpParams value = make_mlp({5, 16, 16, 1}, rng, 1.0, 1.0);
    PpoConfig cfg = tiny_cfg(7);
    cfg.max_steps = 0;
    TrainResult r = adapt(policy, value, inst, 2, mdp_base(), cfg);
    CHECK(flatten(r.policy) == flatten(policy));
    CHECK(flatten(r.value) == flatten(value));
    CHECK(r.report.rows.empty());
    CHECK(r.total_steps == 0);
}

TEST_CASE("adaptation report uses the TrainReport schema and respects the target horizon") {
    Instance inst = toy_2x2();
    TaskSpec spec;
    spec.instance = inst;
    spec.k_values = {1, 2};
    spec.adaptation_steps = 1;
    spec.meta_lr = 0.5;
    spec.meta_epochs = 2;
    spec.seed = 3;
    PpoConfig cfg = tiny_cfg(3);
    MetaResult meta = meta_train(spec, cfg, mdp_base());
    CHECK(meta.report.rows.size() == 2);

    PpoConfig acfg = tiny_cfg(4);
    acfg.max_steps = 2L * acfg.episodes_per_epoch * 1;
    acfg.early_stop_steps = 1000000;
    TrainResult r = adapt(meta.policy, meta.value, inst, 1, mdp_base(), acfg);
    REQUIRE_FALSE(r.report.rows.empty());
    const std::string csv = r.report.to_csv_string();
    CHECK(csv.find("step,epoch,mean_return,value_loss,approx_kl,clip_frac,eval_profit,wallclock_s")
          == 0);
    MdpConfig decode_cfg = mdp_base();
    decode_cfg.horizon = 1;
    CHECK(greedy_decode(inst, decode_cfg, r.policy).arc_count <= 1);
}

TEST_CASE("meta-init adapts to the task family faster than a fresh init") {
    // 3x3 with a strong shared (diagonal) structure across budgets; a 2x2 toy
    // is solved by either init within an epoch or two, leaving nothing to
    // compare
    Instance inst;
    inst.m = inst.n = 3;
    inst.capacities = {1, 1, 1};
    inst.demand = DemandModel::deterministic({1, 1, 1});
    inst.unit_profit = Matrix(3, 3);
    const double profits[9] = {5, 1, 2, 1, 4, 1, 2, 1, 3};
    for (int k = 0; k < 9; ++k) inst.unit_profit(k / 3, k % 3) = profits[k];
    inst.arc_cost = Matrix(3, 3, 0.0);
    inst.budget = 4;
    inst.validate();
    MdpConfig mdp = mdp_base();

    TaskSpec spec;
    spec.instance = inst;
    spec.k_values = {2, 4};
    spec.adaptation_steps = 1;
    spec.meta_lr = 0.5;
    spec.meta_epochs = 100; // to convergence; a half-trained init transfers poorly
    spec.seed = 100;
    PpoConfig meta_cfg = tiny_cfg(100);
    MetaResult meta = meta_train(spec, meta_cfg, mdp);

    std::vector<long> scratch_steps, adapted_steps;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        for (int k : {2, 4}) {
            SampleSet eval = sample_demand(inst.demand, Rng::mix(seed, seed_tags::kEval), 16);
            const double target = optimum_for(inst, k, eval) - 1e-9;

            PpoConfig cfg = tiny_cfg(seed);
            cfg.eval_samples = 16;
            cfg.max_steps = 40L * cfg.episodes_per_epoch * k;
            cfg.early_stop_steps = 1000000;
            Instance task = inst;
            task.budget = k;
            MdpConfig task_mdp = mdp;
            task_mdp.seed = seed;

            TrainResult scratch = train(task, task_mdp, cfg);
            TrainResult warm = adapt(meta.policy, meta.value, task, k, task_mdp, cfg);

            const long s = steps_to_reach(scratch.report, target);
            const long a = steps_to_reach(warm.report, target);
            scratch_steps.push_back(s < 0 ? cfg.max_steps + 1 : s);
            adapted_steps.push_back(a < 0 ? cfg.max_steps + 1 : a);
        }
    }
    auto median = [](std::vector<long> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    MESSAGE("median steps scratch=", median(scratch_steps), " adapted=", median(adapted_steps));
    CHECK(median(adapted_steps) < median(scratch_steps));
}
