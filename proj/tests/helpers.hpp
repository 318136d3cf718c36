#ifndef FLEX_TESTS_HELPERS_HPP
#define FLEX_TESTS_HELPERS_HPP

#include <cmath>
#include <vector>

#include "doctest.h"
#include "flex/instance.hpp"
#include "flex/oracle.hpp"
#include "flex/rng.hpp"

namespace flex::testing {

inline Instance random_instance_exact(Rng& rng, int m, int n, bool with_costs = true);

inline Instance random_instance(Rng& rng, int max_m = 4, int max_n = 4, bool with_costs = true) {
    Instance inst;
    inst.m = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_m)));
    inst.n = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_n)));
    inst.capacities.resize(static_cast<std::size_t>(inst.m));
    for (auto& c : inst.capacities) c = 10.0 * rng.next_double();
    std::vector<double> mu(static_cast<std::size_t>(inst.n)), sigma(static_cast<std::size_t>(inst.n));
    for (int j = 0; j < inst.n; ++j) {
        mu[static_cast<std::size_t>(j)] = 10.0 * rng.next_double();
        sigma[static_cast<std::size_t>(j)] = 3.0 * rng.next_double();
    }
    inst.demand = DemandModel::truncated_normal(mu, sigma);
    inst.unit_profit = Matrix(inst.m, inst.n);
    // profits may be negative to exercise the free-disposal path
    for (auto& p : inst.unit_profit.data) p = 4.0 * rng.next_double() - 0.5;
    inst.arc_cost = Matrix(inst.m, inst.n, 0.0);
    if (with_costs)
        for (auto& c : inst.arc_cost.data) c = rng.next_double();
    inst.budget = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(inst.m * inst.n)));
    inst.validate();
    return inst;
}

inline Instance random_instance_exact(Rng& rng, int m, int n, bool with_costs) {
    Instance inst;
    do {
        inst = random_instance(rng, m, n, with_costs);
    } while (inst.m != m || inst.n != n);
    return inst;
}

inline DemandSample random_demand(Rng& rng, int n, double hi = 10.0) {
    DemandSample d;
    d.d.resize(static_cast<std::size_t>(n));
    for (auto& v : d.d) v = hi * rng.next_double();
    return d;
}

inline FlexNetwork random_network(Rng& rng, int m, int n) {
    FlexNetwork f(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            if (rng.next_double() < 0.5) f.add(i, j);
    return f;
}

inline Matrix random_fractional(Rng& rng, int m, int n) {
    Matrix f(m, n);
    for (auto& v : f.data) v = rng.next_double();
    return f;
}

// Verifies primal feasibility, strong duality and complementary slackness of
// a FlowSolution against the LP  max p.f, col sums <= d, row sums <= c,
// 0 <= f <= bound.  All comparisons at tol relative to problem magnitude.
inline void check_flow_solution(const Instance& inst, const DemandSample& d, const Matrix& bound,
                                const FlowSolution& sol, double tol = 1e-6) {
    const int m = inst.m, n = inst.n;
    double scale = 1.0 + std::abs(sol.objective);
    for (double c : inst.capacities) scale = std::max(scale, c);
    for (double v : d.d) scale = std::max(scale, v);
    const double eps = tol * scale;

    std::vector<double> row(static_cast<std::size_t>(m), 0.0), col(static_cast<std::size_t>(n), 0.0);
    double primal = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            const double f = sol.flow(i, j);
            CHECK(f >= -eps);
            CHECK(f <= bound(i, j) + eps);
            row[static_cast<std::size_t>(i)] += f;
            col[static_cast<std::size_t>(j)] += f;
            primal += inst.unit_profit(i, j) * f;
        }
    for (int i = 0; i < m; ++i) CHECK(row[static_cast<std::size_t>(i)] <= inst.capacities[static_cast<std::size_t>(i)] + eps);
    for (int j = 0; j < n; ++j) CHECK(col[static_cast<std::size_t>(j)] <= d.d[static_cast<std::size_t>(j)] + eps);
    CHECK(primal == doctest::Approx(sol.objective).epsilon(tol));

    // dual feasibility
    double dual = 0.0;
    for (int i = 0; i < m; ++i) {
        CHECK(sol.duals_supply[static_cast<std::size_t>(i)] >= -eps);
        dual += inst.capacities[static_cast<std::size_t>(i)] * sol.duals_supply[static_cast<std::size_t>(i)];
    }
    for (int j = 0; j < n; ++j) {
        CHECK(sol.duals_demand[static_cast<std::size_t>(j)] >= -eps);
        dual += d.d[static_cast<std::size_t>(j)] * sol.duals_demand[static_cast<std::size_t>(j)];
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            const double y = sol.duals_arc_bound(i, j);
            CHECK(y >= -eps);
            dual += bound(i, j) * y;
            const double cover = sol.duals_supply[static_cast<std::size_t>(i)] +
                                 sol.duals_demand[static_cast<std::size_t>(j)] + y;
            CHECK(cover >= inst.unit_profit(i, j) - eps);
        }

    // strong duality
    CHECK(std::abs(primal - dual) <= tol * (1.0 + std::abs(primal)));

    // complementary slackness
    for (int i = 0; i < m; ++i)
        CHECK(std::abs(sol.duals_supply[static_cast<std::size_t>(i)] *
                       (inst.capacities[static_cast<std::size_t>(i)] - row[static_cast<std::size_t>(i)])) <= eps * scale);
    for (int j = 0; j < n; ++j)
        CHECK(std::abs(sol.duals_demand[static_cast<std::size_t>(j)] *
                       (d.d[static_cast<std::size_t>(j)] - col[static_cast<std::size_t>(j)])) <= eps * scale);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            CHECK(std::abs(sol.duals_arc_bound(i, j) * (bound(i, j) - sol.flow(i, j))) <= eps * scale);
            const double slack = sol.duals_supply[static_cast<std::size_t>(i)] +
                                 sol.duals_demand[static_cast<std::size_t>(j)] +
                                 sol.duals_arc_bound(i, j) - inst.unit_profit(i, j);
            CHECK(std::abs(sol.flow(i, j) * slack) <= eps * scale);
        }
}

inline Matrix network_bounds(const Instance& inst, const DemandSample& d, const FlexNetwork& f) {
    Matrix b(inst.m, inst.n);
    for (int i = 0; i < inst.m; ++i)
        for (int j = 0; j < inst.n; ++j)
            b(i, j) = f.has(i, j)
                          ? std::min(inst.capacities[static_cast<std::size_t>(i)], d.d[static_cast<std::size_t>(j)])
                          : 0.0;
    return b;
}

} // namespace flex::testing

#endif
