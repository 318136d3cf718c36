#include "flex/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "flex/ascent.hpp"
#include "flex/errors.hpp"
#include "flex/parallel.hpp"
#include "flex/simplex.hpp"

namespace flex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Successive-shortest-path solver for the second-stage LP, viewed as a
// min-cost flow on  S -> supplies -> demands -> T  with profits negated into
// costs. Free disposal means we stop augmenting as soon as the cheapest
// residual S-T path has nonnegative cost. Node potentials are maintained so
// every Dijkstra runs on nonnegative reduced costs.
//
// The bipartite structure is kept implicit (residual capacities in flat
// arrays indexed by node ids), so a solve performs no heap allocation once
// the workspace has grown to the instance size. Node ids: S = 0, supply i is
// 1+i, demand j is 1+m+j, T = 1+m+n.
class TransportSolver {
public:
    // bound(i,j) is the arc capacity M_ij * F_ij (already scaled); arcs with
    // bound <= 0 or profit <= 0 carry no flow at any optimum and are skipped.
    double solve(int m, int n, const std::vector<double>& cap, const std::vector<double>& dem,
                 const Matrix& profit, const Matrix& bound, Matrix* flow_out) {
        m_ = m;
        n_ = n;
        nodes_ = m + n + 2;
        sink_ = m + n + 1;
        const std::size_t cells = static_cast<std::size_t>(m) * n;

        res_supply_.resize(static_cast<std::size_t>(m));
        res_demand_.resize(static_cast<std::size_t>(n));
        res_arc_.resize(cells);
        bound_.resize(cells);
        pi_.resize(static_cast<std::size_t>(nodes_));
        dist_.resize(static_cast<std::size_t>(nodes_));
        done_.resize(static_cast<std::size_t>(nodes_));
        parent_.resize(static_cast<std::size_t>(nodes_));

        double max_p = 0.0;
        for (int i = 0; i < m; ++i) res_supply_[static_cast<std::size_t>(i)] = std::max(0.0, cap[static_cast<std::size_t>(i)]);
        for (int j = 0; j < n; ++j) res_demand_[static_cast<std::size_t>(j)] = std::max(0.0, dem[static_cast<std::size_t>(j)]);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
                const std::size_t k = static_cast<std::size_t>(i) * n + j;
                const double b = bound(i, j);
                const double p = profit(i, j);
                if (b > 0.0 && p > 0.0) {
                    bound_[k] = b;
                    res_arc_[k] = b;
                    max_p = std::max(max_p, p);
                } else {
                    bound_[k] = 0.0;
                    res_arc_[k] = 0.0;
                }
            }
        }
        profit_ = &profit;

        // exact initial distances: the zero-flow residual graph is a DAG
        pi_[0] = 0.0;
        for (int i = 0; i < m; ++i) pi_[static_cast<std::size_t>(1 + i)] = 0.0;
        double best_t = 0.0;
        bool any_t = false;
        for (int j = 0; j < n; ++j) {
            double best = 0.0;
            bool any = false;
            for (int i = 0; i < m; ++i) {
                const std::size_t k = static_cast<std::size_t>(i) * n + j;
                if (res_arc_[k] <= 0.0) continue;
                const double c = -profit(i, j);
                if (!any || c < best) best = c, any = true;
            }
            pi_[static_cast<std::size_t>(1 + m + j)] = any ? best : 0.0;
            if (any && res_demand_[static_cast<std::size_t>(j)] > 0.0) {
                if (!any_t || best < best_t) best_t = best, any_t = true;
            }
        }
        pi_[static_cast<std::size_t>(sink_)] = any_t ? best_t : 0.0;

        const double stop_tol = 1e-12 * (1.0 + max_p);
        const int max_augment = 10 * (m * n + m + n) + 100;
        int rounds = 0;
        while (true) {
            if (++rounds > max_augment)
                throw NumericalError("transport solver exceeded augmentation limit");
            dijkstra();
            const double dt = dist_[static_cast<std::size_t>(sink_)];
            if (dt == kInf) break;
            if (dt + pi_[static_cast<std::size_t>(sink_)] >= -stop_tol) break;
            augment();
            for (int v = 0; v < nodes_; ++v)
                pi_[static_cast<std::size_t>(v)] += std::min(dist_[static_cast<std::size_t>(v)], dt);
        }

        double objective = 0.0;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
                const std::size_t k = static_cast<std::size_t>(i) * n + j;
                const double f = bound_[k] - res_arc_[k];
                if (flow_out) (*flow_out)(i, j) = f;
                objective += profit(i, j) * f;
            }
        }
        return objective;
    }

private:
    // O(V^2) scan Dijkstra on reduced costs over the implicit residual graph.
    // Ties resolve toward the lowest node index and arcs relax in a fixed
    // order, so paths are deterministic.
    void dijkstra() {
        const int m = m_, n = n_;
        std::fill(dist_.begin(), dist_.end(), kInf);
        std::fill(done_.begin(), done_.end(), std::uint8_t{0});
        std::fill(parent_.begin(), parent_.end(), -1);
        dist_[0] = 0.0;
        for (int iter = 0; iter < nodes_; ++iter) {
            int u = -1;
            double best = kInf;
            for (int v = 0; v < nodes_; ++v) {
                if (!done_[static_cast<std::size_t>(v)] && dist_[static_cast<std::size_t>(v)] < best) {
                    best = dist_[static_cast<std::size_t>(v)];
                    u = v;
                }
            }
            if (u < 0) break;
            done_[static_cast<std::size_t>(u)] = 1;
            const double du = dist_[static_cast<std::size_t>(u)];
            const double pu = pi_[static_cast<std::size_t>(u)];

            if (u == 0) { // source: forward supply arcs
                for (int i = 0; i < m; ++i)
                    if (res_supply_[static_cast<std::size_t>(i)] > 0.0) relax(u, 1 + i, du, pu, 0.0);
            } else if (u <= m) { // supply node
                const int i = u - 1;
                const std::size_t row = static_cast<std::size_t>(i) * n;
                for (int j = 0; j < n; ++j)
                    if (res_arc_[row + j] > 0.0) relax(u, 1 + m + j, du, pu, -(*profit_)(i, j));
            } else if (u < sink_) { // demand node
                const int j = u - 1 - m;
                if (res_demand_[static_cast<std::size_t>(j)] > 0.0) relax(u, sink_, du, pu, 0.0);
                for (int i = 0; i < m; ++i) {
                    const std::size_t k = static_cast<std::size_t>(i) * n + j;
                    if (bound_[k] - res_arc_[k] > 0.0) relax(u, 1 + i, du, pu, (*profit_)(i, j));
                }
            }
            // arcs leaving T and arcs re-entering S can never lie on a simple
            // shortest S-T path, and the capped potential update keeps their
            // reduced costs nonnegative, so neither is relaxed
        }
    }

    void relax(int u, int v, double du, double pu, double cost) {
        const double rc = std::max(0.0, cost + pu - pi_[static_cast<std::size_t>(v)]);
        const double cand = du + rc;
        if (cand < dist_[static_cast<std::size_t>(v)]) {
            dist_[static_cast<std::size_t>(v)] = cand;
            parent_[static_cast<std::size_t>(v)] = u;
        }
    }

    void augment() {
        double push = kInf;
        for (int v = sink_; v != 0;) {
            const int u = parent_[static_cast<std::size_t>(v)];
            push = std::min(push, residual(u, v));
            v = u;
        }
        for (int v = sink_; v != 0;) {
            const int u = parent_[static_cast<std::size_t>(v)];
            apply(u, v, push);
            v = u;
        }
    }

    double residual(int u, int v) const {
        const int m = m_, n = n_;
        if (u == 0) return res_supply_[static_cast<std::size_t>(v - 1)];
        if (u <= m && v > m && v < sink_) { // supply -> demand, forward
            return res_arc_[static_cast<std::size_t>(u - 1) * n + (v - 1 - m)];
        }
        if (u > m && u < sink_ && v <= m) { // demand -> supply, reverse
            const std::size_t k = static_cast<std::size_t>(v - 1) * n + (u - 1 - m);
            return bound_[k] - res_arc_[k];
        }
        if (v == sink_) return res_demand_[static_cast<std::size_t>(u - 1 - m)];
        return 0.0;
    }

    void apply(int u, int v, double push) {
        const int m = m_, n = n_;
        if (u == 0) {
            res_supply_[static_cast<std::size_t>(v - 1)] -= push;
        } else if (u <= m && v > m && v < sink_) {
            res_arc_[static_cast<std::size_t>(u - 1) * n + (v - 1 - m)] -= push;
        } else if (u > m && u < sink_ && v <= m) {
            res_arc_[static_cast<std::size_t>(v - 1) * n + (u - 1 - m)] += push;
        } else if (v == sink_) {
            res_demand_[static_cast<std::size_t>(u - 1 - m)] -= push;
        }
    }

    int m_ = 0, n_ = 0, nodes_ = 0, sink_ = 0;
    const Matrix* profit_ = nullptr;
    std::vector<double> res_supply_;
    std::vector<double> res_demand_;
    std::vector<double> res_arc_;
    std::vector<double> bound_;
    std::vector<double> pi_;
    std::vector<double> dist_;
    std::vector<std::uint8_t> done_;
    std::vector<int> parent_;
};

void scaled_bounds(const Instance& inst, const DemandSample& d, const Matrix& fractional, Matrix& out) {
    for (int i = 0; i < inst.m; ++i) {
        const double c = inst.capacities[static_cast<std::size_t>(i)];
        for (int j = 0; j < inst.n; ++j) {
            const double big_m = std::min(c, d.d[static_cast<std::size_t>(j)]);
            out(i, j) = big_m * fractional(i, j);
        }
    }
}

void binary_bounds(const Instance& inst, const DemandSample& d, const FlexNetwork& f, Matrix& out) {
    for (int i = 0; i < inst.m; ++i) {
        const double c = inst.capacities[static_cast<std::size_t>(i)];
        for (int j = 0; j < inst.n; ++j)
            out(i, j) = f.has(i, j) ? std::min(c, d.d[static_cast<std::size_t>(j)]) : 0.0;
    }
}

// Recovers an optimal dual (u, v, y) from an optimal flow by Bellman-Ford on
// the difference-constraint system over z_i = -u_i and w_j = v_j:
//   arc slack at 0:        u_i + v_j >= p_ij
//   arc strictly interior: u_i + v_j  = p_ij
//   arc saturated:         u_i + v_j <= p_ij
//   u_i >= 0, = 0 on unsaturated rows;  v_j >= 0, = 0 on unsaturated columns
// Any feasible point of this system is an exact optimal dual, and one exists
// because the LP has an optimal dual satisfying these very conditions.
// Buffers are reused across calls.
class DualExtractor {
public:
    void extract(const Instance& inst, const DemandSample& d, const Matrix& bound,
                 const Matrix& flow, FlowSolution& sol) {
        const int m = inst.m, n = inst.n;
        double cap_scale = 0.0;
        for (double c : inst.capacities) cap_scale = std::max(cap_scale, c);
        for (double b : bound.data) cap_scale = std::max(cap_scale, b);
        const double ftol = 1e-9 * (1.0 + cap_scale);

        row_flow_.assign(static_cast<std::size_t>(m), 0.0);
        col_flow_.assign(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) {
                row_flow_[static_cast<std::size_t>(i)] += flow(i, j);
                col_flow_[static_cast<std::size_t>(j)] += flow(i, j);
            }

        if (!attempt(inst, d, bound, flow, ftol, 0.0) &&
            !attempt(inst, d, bound, flow, ftol, 1e-9 * (1.0 + cap_scale)))
            throw NumericalError("dual extraction found no consistent complementary-slackness labeling");

        const double g0 = dist_[0];
        sol.duals_supply.assign(static_cast<std::size_t>(m), 0.0);
        sol.duals_demand.assign(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < m; ++i)
            sol.duals_supply[static_cast<std::size_t>(i)] = std::max(0.0, -(dist_[static_cast<std::size_t>(1 + i)] - g0));
        for (int j = 0; j < n; ++j)
            sol.duals_demand[static_cast<std::size_t>(j)] = std::max(0.0, dist_[static_cast<std::size_t>(1 + m + j)] - g0);
        if (sol.duals_arc_bound.rows != m || sol.duals_arc_bound.cols != n)
            sol.duals_arc_bound = Matrix(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) {
                const double y = inst.unit_profit(i, j) - sol.duals_supply[static_cast<std::size_t>(i)] -
                                 sol.duals_demand[static_cast<std::size_t>(j)];
                sol.duals_arc_bound(i, j) = std::max(0.0, y);
            }
    }

private:
    struct Edge {
        int from;
        int to;
        double w;
    };

    void constrain(int a, int b, double w) { edges_.push_back({b, a, w}); } // x_a - x_b <= w

    bool attempt(const Instance& inst, const DemandSample& d, const Matrix& bound,
                 const Matrix& flow, double ftol, double slack) {
        const int m = inst.m, n = inst.n;
        const int ground = 0;
        edges_.clear();
        for (int i = 0; i < m; ++i) {
            constrain(1 + i, ground, 0.0);
            if (row_flow_[static_cast<std::size_t>(i)] < inst.capacities[static_cast<std::size_t>(i)] - ftol)
                constrain(ground, 1 + i, slack);
        }
        for (int j = 0; j < n; ++j) {
            constrain(ground, 1 + m + j, 0.0);
            if (col_flow_[static_cast<std::size_t>(j)] < d.d[static_cast<std::size_t>(j)] - ftol)
                constrain(1 + m + j, ground, slack);
        }
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
                const double b = bound(i, j);
                if (b <= 2.0 * ftol) continue; // bound pinned at ~0: y absorbs everything
                const double p = inst.unit_profit(i, j);
                if (p <= 0.0) continue;        // arc never carries flow; u+v >= p is automatic
                const double f = flow(i, j);
                const bool at_zero = f <= ftol;
                const bool at_cap = f >= b - ftol;
                if (at_zero && at_cap) continue;
                if (at_zero) {
                    constrain(1 + i, 1 + m + j, -p + slack); // u + v >= p
                } else if (at_cap) {
                    constrain(1 + m + j, 1 + i, p + slack); // u + v <= p
                } else {
                    constrain(1 + i, 1 + m + j, -p + slack);
                    constrain(1 + m + j, 1 + i, p + slack);
                }
            }
        }

        const int nodes = 1 + m + n;
        dist_.assign(static_cast<std::size_t>(nodes), 0.0);
        for (int pass = 0; pass < nodes + 1; ++pass) {
            bool changed = false;
            for (const Edge& e : edges_) {
                const double cand = dist_[static_cast<std::size_t>(e.from)] + e.w;
                if (cand < dist_[static_cast<std::size_t>(e.to)] - 1e-15) {
                    dist_[static_cast<std::size_t>(e.to)] = cand;
                    changed = true;
                }
            }
            if (!changed) return true;
        }
        return false;
    }

    std::vector<Edge> edges_;
    std::vector<double> dist_;
    std::vector<double> row_flow_;
    std::vector<double> col_flow_;
};

void extract_duals_full(const Instance& inst, const DemandSample& d, const Matrix& bound,
                        const Matrix& flow, FlowSolution& sol) {
    DualExtractor ex;
    ex.extract(inst, d, bound, flow, sol);
}

void check_shapes(const Instance& inst, const DemandSample& d) {
    if (static_cast<int>(d.d.size()) != inst.n)
        throw ValidationError("demand", "demand sample dimension differs from n");
}

} // namespace

FlowSolution solve_profit(const Instance& inst, const DemandSample& d, const FlexNetwork& f, Engine engine) {
    check_shapes(inst, d);
    if (f.m != inst.m || f.n != inst.n)
        throw ValidationError("network", "network shape differs from instance");
    if (engine == Engine::reference) return solve_profit_reference(inst, d, f);

    Matrix bound(inst.m, inst.n);
    binary_bounds(inst, d, f, bound);
    FlowSolution sol;
    sol.flow = Matrix(inst.m, inst.n);
    TransportSolver solver;
    sol.objective = solver.solve(inst.m, inst.n, inst.capacities, d.d, inst.unit_profit, bound, &sol.flow);
    extract_duals_full(inst, d, bound, sol.flow, sol);
    return sol;
}

double solve_profit_value(const Instance& inst, const DemandSample& d, const FlexNetwork& f) {
    check_shapes(inst, d);
    Matrix bound(inst.m, inst.n);
    binary_bounds(inst, d, f, bound);
    TransportSolver solver;
    return solver.solve(inst.m, inst.n, inst.capacities, d.d, inst.unit_profit, bound, nullptr);
}

double full_flex_profit(const Instance& inst, const DemandSample& d) {
    return solve_profit_value(inst, d, FlexNetwork::full(inst.m, inst.n));
}

std::vector<double> estimator_terms(const Instance& inst, const FlexNetwork& f,
                                    const SampleSet& samples, const EstimatorConfig& cfg) {
    if (cfg.omega < 1) throw ValidationError("omega", "omega must be >= 1");
    if (samples.count() < cfg.omega)
        throw ValidationError("samples", "sample set smaller than omega");
    std::vector<double> terms(static_cast<std::size_t>(cfg.omega), 0.0);
    const FlexNetwork full = FlexNetwork::full(inst.m, inst.n);
    parallel_chunks(cfg.omega, [&](int lo, int hi) {
        Matrix bound(inst.m, inst.n);
        TransportSolver solver;
        for (int w = lo; w < hi; ++w) {
            const DemandSample& d = samples[w];
            binary_bounds(inst, d, f, bound);
            double t = solver.solve(inst.m, inst.n, inst.capacities, d.d, inst.unit_profit, bound, nullptr);
            if (cfg.variance_reduction) {
                binary_bounds(inst, d, full, bound);
                t -= solver.solve(inst.m, inst.n, inst.capacities, d.d, inst.unit_profit, bound, nullptr);
            }
            terms[static_cast<std::size_t>(w)] = t;
        }
    });
    return terms;
}

double estimate_expected_profit(const Instance& inst, const FlexNetwork& f,
                                const SampleSet& samples, const EstimatorConfig& cfg) {
    const std::vector<double> terms = estimator_terms(inst, f, samples, cfg);
    double sum = 0.0;
    for (double t : terms) sum += t;
    return sum / static_cast<double>(cfg.omega);
}

double installation_cost(const Instance& inst, const FlexNetwork& f) {
    double cost = 0.0;
    for (int i = 0; i < inst.m; ++i)
        for (int j = 0; j < inst.n; ++j)
            if (f.has(i, j)) cost += inst.arc_cost(i, j);
    return cost;
}

double fdp_objective_estimate(const Instance& inst, const FlexNetwork& f,
                              const SampleSet& samples, int omega) {
    EstimatorConfig cfg;
    cfg.omega = omega;
    cfg.variance_reduction = false;
    return estimate_expected_profit(inst, f, samples, cfg) - installation_cost(inst, f);
}

FlowSolution solve_relaxed(const Instance& inst, const DemandSample& d, const Matrix& fractional) {
    check_shapes(inst, d);
    if (fractional.rows != inst.m || fractional.cols != inst.n)
        throw ValidationError("fractional_network", "relaxation shape differs from instance");
    Matrix bound(inst.m, inst.n);
    scaled_bounds(inst, d, fractional, bound);
    FlowSolution sol;
    sol.flow = Matrix(inst.m, inst.n);
    TransportSolver solver;
    sol.objective = solver.solve(inst.m, inst.n, inst.capacities, d.d, inst.unit_profit, bound, &sol.flow);
    extract_duals_full(inst, d, bound, sol.flow, sol);
    return sol;
}

double relaxed_profit_value(const Instance& inst, const DemandSample& d, const Matrix& fractional) {
    check_shapes(inst, d);
    Matrix bound(inst.m, inst.n);
    scaled_bounds(inst, d, fractional, bound);
    TransportSolver solver;
    return solver.solve(inst.m, inst.n, inst.capacities, d.d, inst.unit_profit, bound, nullptr);
}

Matrix profit_subgradient(const Instance& inst, const DemandSample& d, const Matrix& fractional) {
    for (double v : fractional.data)
        if (v < -1e-12 || v > 1.0 + 1e-12)
            throw ValidationError("fractional_network", "entries must lie in [0, 1]");
    FlowSolution sol = solve_relaxed(inst, d, fractional);
    Matrix g(inst.m, inst.n);
    for (int i = 0; i < inst.m; ++i) {
        const double c = inst.capacities[static_cast<std::size_t>(i)];
        for (int j = 0; j < inst.n; ++j) {
            const double big_m = std::min(c, d.d[static_cast<std::size_t>(j)]);
            g(i, j) = big_m * sol.duals_arc_bound(i, j);
        }
    }
    return g;
}

SampledRelaxation::SampledRelaxation(const Instance& inst, const SampleSet& samples, int omega)
    : inst_(inst), samples_(samples), omega_(omega) {
    if (omega < 1) throw ValidationError("omega", "omega must be >= 1");
    if (samples.count() < omega) throw ValidationError("samples", "sample set smaller than omega");
    objs_.resize(static_cast<std::size_t>(omega));
    grads_.resize(static_cast<std::size_t>(omega));
}

double SampledRelaxation::eval(const Matrix& point, Matrix& grad_out) {
    const int m = inst_.m, n = inst_.n;
    const std::size_t cells = static_cast<std::size_t>(m) * n;
    parallel_chunks(omega_, [&](int lo, int hi) {
        Matrix bound(m, n);
        TransportSolver solver;
        DualExtractor duals;
        FlowSolution sol;
        sol.flow = Matrix(m, n);
        for (int w = lo; w < hi; ++w) {
            const DemandSample& d = samples_[w];
            scaled_bounds(inst_, d, point, bound);
            sol.objective = solver.solve(m, n, inst_.capacities, d.d, inst_.unit_profit, bound, &sol.flow);
            duals.extract(inst_, d, bound, sol.flow, sol);
            objs_[static_cast<std::size_t>(w)] = sol.objective;
            Matrix& g = grads_[static_cast<std::size_t>(w)];
            if (g.rows != m || g.cols != n) g = Matrix(m, n);
            for (int i = 0; i < m; ++i) {
                const double c = inst_.capacities[static_cast<std::size_t>(i)];
                for (int j = 0; j < n; ++j)
                    g(i, j) = std::min(c, d.d[static_cast<std::size_t>(j)]) * sol.duals_arc_bound(i, j);
            }
        }
    });
    double mean = 0.0;
    for (int w = 0; w < omega_; ++w) mean += objs_[static_cast<std::size_t>(w)];
    mean /= static_cast<double>(omega_);
    grad_out.fill(0.0);
    for (int w = 0; w < omega_; ++w)
        for (std::size_t k = 0; k < cells; ++k) grad_out.data[k] += grads_[static_cast<std::size_t>(w)].data[k];
    double value = mean;
    for (std::size_t k = 0; k < cells; ++k) {
        grad_out.data[k] = grad_out.data[k] / static_cast<double>(omega_) - inst_.arc_cost.data[k];
        value -= inst_.arc_cost.data[k] * point.data[k];
    }
    return value;
}

double lp_upper_bound(const Instance& inst, const SampleSet& samples, int omega) {
    SampledRelaxation relax(inst, samples, omega);
    AscentResult res = projected_supergradient_ascent(
        [&](const Matrix& point, Matrix& grad) { return relax.eval(point, grad); },
        [](Matrix& point) {
            for (double& v : point.data) v = std::clamp(v, 0.0, 1.0);
        },
        Matrix(inst.m, inst.n, 1.0));
    return res.value;
}

} // namespace flex
