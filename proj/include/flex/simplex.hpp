#ifndef FLEX_SIMPLEX_HPP
#define FLEX_SIMPLEX_HPP

#include <vector>

#include "flex/instance.hpp"
#include "flex/matrix.hpp"
#include "flex/oracle.hpp"

namespace flex {

// Dense tableau simplex for  max p.f  s.t.  column sums <= dem, row sums <= cap,
// 0 <= f_ij <= bound_ij.  Written as an independent cross-check for the network
// flow engine: it shares no code with it beyond the result type. Bland's rule,
// so it terminates on degenerate instances.
FlowSolution simplex_transport(int m, int n, const std::vector<double>& cap,
                               const std::vector<double>& dem, const Matrix& profit,
                               const Matrix& bound);

// P(d, F) through the simplex engine (the --engine reference path).
FlowSolution solve_profit_reference(const Instance& inst, const DemandSample& d,
                                    const FlexNetwork& f);

} // namespace flex

#endif
