#ifndef FLEX_ASCENT_HPP
#define FLEX_ASCENT_HPP

#include <cmath>
#include <functional>

#include "flex/matrix.hpp"

namespace flex {

struct AscentResult {
    Matrix point;
    double value = 0.0;
    int evals = 0;
};

// Projected supergradient ascent for concave piecewise-linear objectives.
// Constant step within a level, halved (restarting from the incumbent) after
// `stall_window` evaluations without improvement. The initial step is scaled
// so the first move is O(1) in the box geometry.
//
// eval(point, grad_out) returns the objective and writes a supergradient.
// project(point) maps a point back into the feasible set in place.
// fruitless_level_limit: give up after this many consecutive step levels that
// produced no improvement at all (0 disables the cut). Levels early in the
// run are usually fruitless because the step is still too long, so the count
// restarts whenever any level improves the incumbent.
inline AscentResult projected_supergradient_ascent(
    const std::function<double(const Matrix&, Matrix&)>& eval,
    const std::function<void(Matrix&)>& project, Matrix start, int max_evals = 5000,
    int stall_window = 40, int max_levels = 30, int fruitless_level_limit = 0) {
    project(start);
    Matrix grad(start.rows, start.cols);
    AscentResult res;
    res.value = eval(start, grad);
    res.point = start;
    res.evals = 1;

    double g_inf = 0.0;
    for (double v : grad.data) g_inf = std::max(g_inf, std::abs(v));
    if (g_inf < 1e-15) return res;

    double step = 1.0 / g_inf;
    Matrix cur = start;
    Matrix best_grad = grad;
    int stall = 0;
    int levels = 0;
    int fruitless_levels = 0;
    bool level_improved = false;
    while (res.evals < max_evals) {
        for (std::size_t k = 0; k < cur.data.size(); ++k) cur.data[k] += step * grad.data[k];
        project(cur);
        const double v = eval(cur, grad);
        ++res.evals;
        if (v > res.value + 1e-13 * (1.0 + std::abs(res.value))) {
            res.value = v;
            res.point = cur;
            best_grad = grad;
            stall = 0;
            level_improved = true;
        } else if (++stall >= stall_window) {
            if (++levels > max_levels) break;
            fruitless_levels = level_improved ? 0 : fruitless_levels + 1;
            if (fruitless_level_limit > 0 && fruitless_levels >= fruitless_level_limit) break;
            level_improved = false;
            step *= 0.5;
            cur = res.point;
            grad = best_grad;
            stall = 0;
        }
    }
    return res;
}

} // namespace flex

#endif
