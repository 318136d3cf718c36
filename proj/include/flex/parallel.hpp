#ifndef FLEX_PARALLEL_HPP
#define FLEX_PARALLEL_HPP

#include <functional>

namespace flex {

// Worker threads used by parallel_chunks. Defaults to the hardware count;
// set to 1 to force serial execution.
int max_threads();
void set_max_threads(int n);

// Splits [0, n) into a fixed number of chunks (independent of the thread
// count) and runs fn(begin, end) for each, possibly concurrently. Callers
// write results into per-index slots and reduce serially in index order, so
// outcomes do not depend on scheduling.
void parallel_chunks(int n, const std::function<void(int, int)>& fn);

void parallel_for(int n, const std::function<void(int)>& fn);

} // namespace flex

#endif
