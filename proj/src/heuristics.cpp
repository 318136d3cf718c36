#include "flex/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flex/ascent.hpp"
#include "flex/errors.hpp"
#include "flex/parallel.hpp"

namespace flex {

namespace {

double mean_profit(const Instance& inst, const FlexNetwork& f, const SampleSet& samples, int omega) {
    EstimatorConfig cfg;
    cfg.omega = omega;
    cfg.variance_reduction = false;
    return estimate_expected_profit(inst, f, samples, cfg);
}

} // namespace

HeuristicResult greedy(const Instance& inst, const SampleSet& samples, int omega) {
    if (omega < 1) throw ValidationError("omega", "omega must be >= 1");
    if (samples.count() < omega) throw ValidationError("samples", "sample set smaller than omega");

    HeuristicResult res;
    res.network = FlexNetwork(inst.m, inst.n);
    double base_profit = 0.0; // empty network earns nothing
    double base_objective = 0.0;

    while (res.network.arc_count < inst.budget) {
        std::vector<int> candidates;
        candidates.reserve(static_cast<std::size_t>(inst.m * inst.n));
        for (int i = 0; i < inst.m; ++i)
            for (int j = 0; j < inst.n; ++j)
                if (!res.network.has(i, j)) candidates.push_back(i * inst.n + j);
        if (candidates.empty()) break;

        std::vector<double> gains(candidates.size());
        parallel_for(static_cast<int>(candidates.size()), [&](int c) {
            const int arc = candidates[static_cast<std::size_t>(c)];
            FlexNetwork trial = res.network;
            trial.add(arc / inst.n, arc % inst.n);
            gains[static_cast<std::size_t>(c)] =
                mean_profit(inst, trial, samples, omega) - base_profit -
                inst.arc_cost(arc / inst.n, arc % inst.n);
        });

        int best_arc = -1;
        double best_gain = 0.0;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (gains[c] > best_gain) { // strict: ties keep the earlier (lower) index
                best_gain = gains[c];
                best_arc = candidates[c];
            }
        }
        if (best_arc < 0) break; // best improvement <= 0

        const int i = best_arc / inst.n, j = best_arc % inst.n;
        res.network.add(i, j);
        base_profit = mean_profit(inst, res.network, samples, omega);
        base_objective = base_profit - installation_cost(inst, res.network);
        res.trace.networks.push_back(res.network);
        res.trace.scores.push_back(base_objective);
        res.trace.added_arcs.emplace_back(i, j);
    }
    return res;
}

void project_capped_box(Matrix& f, const Matrix& lower, double budget) {
    double sum = 0.0;
    for (std::size_t k = 0; k < f.data.size(); ++k) {
        f.data[k] = std::clamp(f.data[k], lower.data[k], 1.0);
        sum += f.data[k];
    }
    if (sum <= budget + 1e-12) return;

    // water filling: sum of clamp(x - theta, lower, 1) is continuous and
    // nonincreasing in theta, so bisection pins the budget
    double lo = 0.0, hi = 0.0;
    for (double v : f.data) hi = std::max(hi, v);
    const Matrix x = f;
    auto mass = [&](double theta) {
        double s = 0.0;
        for (std::size_t k = 0; k < x.data.size(); ++k)
            s += std::clamp(x.data[k] - theta, lower.data[k], 1.0);
        return s;
    };
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mass(mid) > budget) lo = mid;
        else hi = mid;
    }
    for (std::size_t k = 0; k < f.data.size(); ++k)
        f.data[k] = std::clamp(x.data[k] - hi, lower.data[k], 1.0);
}

HeuristicResult sp_heuristic(const Instance& inst, const SampleSet& samples, int omega) {
    if (omega < 1) throw ValidationError("omega", "omega must be >= 1");
    if (samples.count() < omega) throw ValidationError("samples", "sample set smaller than omega");

    HeuristicResult res;
    res.network = FlexNetwork(inst.m, inst.n);
    SampledRelaxation relax(inst, samples, omega);
    const double budget = static_cast<double>(inst.budget);

    // Warm start: the all-ones point projected into the budget (exactly the
    // relaxation optimum for costless instances); later iterations restart
    // from the previous relaxation solution with the new arc pinned.
    Matrix warm(inst.m, inst.n, 1.0);

    for (int k = 0; k < inst.budget; ++k) {
        Matrix lower(inst.m, inst.n, 0.0);
        for (int i = 0; i < inst.m; ++i)
            for (int j = 0; j < inst.n; ++j)
                if (res.network.has(i, j)) lower(i, j) = 1.0;

        AscentResult sol = projected_supergradient_ascent(
            [&](const Matrix& point, Matrix& grad) { return relax.eval(point, grad); },
            [&](Matrix& point) { project_capped_box(point, lower, budget); },
            warm, 500, 20, 14, 5);
        warm = sol.point;

        int best_arc = -1;
        double best_val = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < inst.m; ++i)
            for (int j = 0; j < inst.n; ++j) {
                if (res.network.has(i, j)) continue;
                const double v = sol.point(i, j);
                if (v > best_val + 1e-12) {
                    best_val = v;
                    best_arc = i * inst.n + j;
                }
            }
        if (best_arc < 0) break; // no absent arcs left

        const int i = best_arc / inst.n, j = best_arc % inst.n;
        res.network.add(i, j);
        res.trace.networks.push_back(res.network);
        res.trace.scores.push_back(fdp_objective_estimate(inst, res.network, samples, omega));
        res.trace.added_arcs.emplace_back(i, j);
    }
    return res;
}

} // namespace flex
