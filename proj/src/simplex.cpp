#include "flex/simplex.hpp"

#include <algorithm>
#include <cmath>

#include "flex/errors.hpp"

namespace flex {

FlowSolution simplex_transport(int m, int n, const std::vector<double>& cap,
                               const std::vector<double>& dem, const Matrix& profit,
                               const Matrix& bound) {
    const int nv = m * n;            // structural variables f_ij, row-major
    const int nr = n + m + nv;       // demand rows, supply rows, bound rows
    const int nc = nv + nr + 1;      // + slacks + rhs
    const int rhs = nc - 1;

    double p_scale = 1.0;
    for (double p : profit.data) p_scale = std::max(p_scale, std::abs(p));
    const double tol = 1e-9 * p_scale;

    // tableau[0] is the objective row (reduced costs); constraint rows follow
    std::vector<std::vector<double>> t(static_cast<std::size_t>(nr + 1),
                                       std::vector<double>(static_cast<std::size_t>(nc), 0.0));
    auto var = [n](int i, int j) { return i * n + j; };

    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) t[0][static_cast<std::size_t>(var(i, j))] = -profit(i, j);

    for (int j = 0; j < n; ++j) {
        auto& row = t[static_cast<std::size_t>(1 + j)];
        for (int i = 0; i < m; ++i) row[static_cast<std::size_t>(var(i, j))] = 1.0;
        row[static_cast<std::size_t>(rhs)] = dem[static_cast<std::size_t>(j)];
    }
    for (int i = 0; i < m; ++i) {
        auto& row = t[static_cast<std::size_t>(1 + n + i)];
        for (int j = 0; j < n; ++j) row[static_cast<std::size_t>(var(i, j))] = 1.0;
        row[static_cast<std::size_t>(rhs)] = cap[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            auto& row = t[static_cast<std::size_t>(1 + n + m + var(i, j))];
            row[static_cast<std::size_t>(var(i, j))] = 1.0;
            row[static_cast<std::size_t>(rhs)] = bound(i, j);
        }
    for (int r = 0; r < nr; ++r) t[static_cast<std::size_t>(1 + r)][static_cast<std::size_t>(nv + r)] = 1.0;

    std::vector<int> basis(static_cast<std::size_t>(nr));
    for (int r = 0; r < nr; ++r) basis[static_cast<std::size_t>(r)] = nv + r;

    const int max_pivots = 200000;
    for (int pivot = 0;; ++pivot) {
        if (pivot > max_pivots) throw NumericalError("simplex exceeded pivot limit");

        // Bland: entering variable = lowest index with negative reduced cost
        int enter = -1;
        for (int c = 0; c < nv + nr; ++c) {
            if (t[0][static_cast<std::size_t>(c)] < -tol) {
                enter = c;
                break;
            }
        }
        if (enter < 0) break;

        int leave = -1;
        double best_ratio = 0.0;
        for (int r = 0; r < nr; ++r) {
            const double a = t[static_cast<std::size_t>(1 + r)][static_cast<std::size_t>(enter)];
            if (a <= tol) continue;
            const double ratio = t[static_cast<std::size_t>(1 + r)][static_cast<std::size_t>(rhs)] / a;
            if (leave < 0 || ratio < best_ratio - 1e-15 ||
                (std::abs(ratio - best_ratio) <= 1e-15 &&
                 basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
                leave = r;
                best_ratio = ratio;
            }
        }
        if (leave < 0) throw NumericalError("simplex detected an unbounded direction");

        auto& prow = t[static_cast<std::size_t>(1 + leave)];
        const double piv = prow[static_cast<std::size_t>(enter)];
        for (double& x : prow) x /= piv;
        for (int r = 0; r <= nr; ++r) {
            if (r == 1 + leave) continue;
            auto& row = t[static_cast<std::size_t>(r)];
            const double factor = row[static_cast<std::size_t>(enter)];
            if (factor == 0.0) continue;
            for (int c = 0; c < nc; ++c)
                row[static_cast<std::size_t>(c)] -= factor * prow[static_cast<std::size_t>(c)];
            row[static_cast<std::size_t>(enter)] = 0.0;
        }
        basis[static_cast<std::size_t>(leave)] = enter;
    }

    FlowSolution sol;
    sol.flow = Matrix(m, n, 0.0);
    for (int r = 0; r < nr; ++r) {
        const int b = basis[static_cast<std::size_t>(r)];
        if (b < nv) {
            const double v = t[static_cast<std::size_t>(1 + r)][static_cast<std::size_t>(rhs)];
            sol.flow(b / n, b % n) = std::max(0.0, v);
        }
    }
    sol.objective = t[0][static_cast<std::size_t>(rhs)];
    sol.duals_demand.resize(static_cast<std::size_t>(n));
    sol.duals_supply.resize(static_cast<std::size_t>(m));
    sol.duals_arc_bound = Matrix(m, n);
    for (int j = 0; j < n; ++j)
        sol.duals_demand[static_cast<std::size_t>(j)] = std::max(0.0, t[0][static_cast<std::size_t>(nv + j)]);
    for (int i = 0; i < m; ++i)
        sol.duals_supply[static_cast<std::size_t>(i)] = std::max(0.0, t[0][static_cast<std::size_t>(nv + n + i)]);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            sol.duals_arc_bound(i, j) =
                std::max(0.0, t[0][static_cast<std::size_t>(nv + n + m + var(i, j))]);
    return sol;
}

FlowSolution solve_profit_reference(const Instance& inst, const DemandSample& d,
                                    const FlexNetwork& f) {
    Matrix bound(inst.m, inst.n);
    for (int i = 0; i < inst.m; ++i) {
        const double c = inst.capacities[static_cast<std::size_t>(i)];
        for (int j = 0; j < inst.n; ++j)
            bound(i, j) = f.has(i, j) ? std::min(c, d.d[static_cast<std::size_t>(j)]) : 0.0;
    }
    return simplex_transport(inst.m, inst.n, inst.capacities, d.d, inst.unit_profit, bound);
}

} // namespace flex
