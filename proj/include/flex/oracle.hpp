#ifndef FLEX_ORACLE_HPP
#define FLEX_ORACLE_HPP

#include <vector>

#include "flex/instance.hpp"
#include "flex/matrix.hpp"

namespace flex {

// Optimal second-stage allocation for one demand realization, with the LP
// dual information needed for supergradients and for verifying optimality.
struct FlowSolution {
    Matrix flow;                      // f_ij >= 0
    double objective = 0.0;           // sum p_ij f_ij
    std::vector<double> duals_supply; // u_i, capacity rows
    std::vector<double> duals_demand; // v_j, demand rows
    Matrix duals_arc_bound;           // y_ij, bounds f_ij <= M_ij F_ij
};

enum class Engine { flow, reference };

struct EstimatorConfig {
    int omega = 1;                   // samples per estimate
    bool variance_reduction = false; // subtract the full-flexibility profit per sample
};

// P(d, F): exact optimum of the transportation LP restricted to arcs of F,
// with arc bounds M_ij = min(c_i, d_j). The flow engine is a successive
// shortest path solver; `reference` routes to the independent dense simplex.
FlowSolution solve_profit(const Instance& inst, const DemandSample& d, const FlexNetwork& f,
                          Engine engine = Engine::flow);

// Objective only (flow engine), skipping flow matrix and dual extraction.
double solve_profit_value(const Instance& inst, const DemandSample& d, const FlexNetwork& f);

// P(d, 1): profit of the network with every arc present.
double full_flex_profit(const Instance& inst, const DemandSample& d);

// The per-sample terms of the estimator: P(d_w, F), or
// P(d_w, F) - P(d_w, 1) under variance reduction. Uses the first omega
// samples of the set in order.
std::vector<double> estimator_terms(const Instance& inst, const FlexNetwork& f,
                                    const SampleSet& samples, const EstimatorConfig& cfg);

double estimate_expected_profit(const Instance& inst, const FlexNetwork& f,
                                const SampleSet& samples, const EstimatorConfig& cfg);

double installation_cost(const Instance& inst, const FlexNetwork& f);

// Sample-average objective of the design problem itself:
// mean_w P(d_w, F) - sum_ij I_ij F_ij  (no variance reduction).
double fdp_objective_estimate(const Instance& inst, const FlexNetwork& f,
                              const SampleSet& samples, int omega);

// P(d, F*M) for a fractional relaxation F in [0,1]^{m x n}: arc bounds are
// scaled to M_ij F_ij. Used by the SP heuristic and the LP upper bound.
FlowSolution solve_relaxed(const Instance& inst, const DemandSample& d, const Matrix& fractional);
double relaxed_profit_value(const Instance& inst, const DemandSample& d, const Matrix& fractional);

// Supergradient of the concave map F -> P(d, F*M): g_ij = M_ij y_ij with y an
// optimal dual of the arc-bound constraints.
Matrix profit_subgradient(const Instance& inst, const DemandSample& d, const Matrix& fractional);

// Sample-average relaxation objective and supergradient at a fractional
// point:  q(F) = mean_w P(d_w, F*M^w) - sum I F,  grad = mean_w M^w y^w - I.
// Shared by the LP upper bound and the SP heuristic's inner problem.
class SampledRelaxation {
public:
    SampledRelaxation(const Instance& inst, const SampleSet& samples, int omega);
    double eval(const Matrix& point, Matrix& grad_out);

private:
    const Instance& inst_;
    const SampleSet& samples_;
    int omega_;
    std::vector<double> objs_;
    std::vector<Matrix> grads_;
};

// Upper bound on the sample-average FDP optimum obtained by dropping both the
// integrality of F and the budget K: maximizes
//   mean_w P(d_w, F*M) - sum I_ij F_ij   over F in [0,1]^{m x n}
// by projected supergradient ascent and returns the best value found.
double lp_upper_bound(const Instance& inst, const SampleSet& samples, int omega);

} // namespace flex

#endif
