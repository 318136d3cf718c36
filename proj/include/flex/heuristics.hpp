#ifndef FLEX_HEURISTICS_HPP
#define FLEX_HEURISTICS_HPP

#include <utility>
#include <vector>

#include "flex/instance.hpp"
#include "flex/oracle.hpp"

namespace flex {

// Audit trail of an arc-adding heuristic: the network, its sample-average
// objective (profit estimate minus installation cost, on the decision sample
// set) and the arc chosen, one entry per completed iteration.
struct HeuristicTrace {
    std::vector<FlexNetwork> networks;
    std::vector<double> scores;
    std::vector<std::pair<int, int>> added_arcs;
};

struct HeuristicResult {
    FlexNetwork network;
    HeuristicTrace trace;
};

// Greedy arc adding: from the empty network, repeatedly add the arc with the
// largest estimated objective improvement (profit gain on the shared sample
// set minus its installation cost); stop at K arcs or when the best
// improvement is nonpositive. Ties break toward the lowest flattened index.
HeuristicResult greedy(const Instance& inst, const SampleSet& samples, int omega);

// Stochastic-programming heuristic: K iterations; each solves the continuous
// relaxation pinned to the arcs chosen so far (projected supergradient ascent
// over {F >= F_prev, F <= 1, sum F <= K}) and adds the absent arc with the
// highest fractional value, ties toward the lowest index.
HeuristicResult sp_heuristic(const Instance& inst, const SampleSet& samples, int omega);

// Euclidean projection onto {lower <= F <= 1, sum F <= budget} by clamping
// plus a water-filling threshold. Exposed for tests.
void project_capped_box(Matrix& f, const Matrix& lower, double budget);

} // namespace flex

#endif
