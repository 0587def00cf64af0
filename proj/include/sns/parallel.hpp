#pragma once

#include <functional>

namespace sns {

// Runs fn(i) for i in [0, count).  With threads > 1 the iterations are
// distributed over an OpenMP team; each iteration must write only to its own
// output slot so the result is identical for every thread count.  The first
// exception thrown (if any) is rethrown after the loop completes.
void for_each_sample(int count, int threads,
                     const std::function<void(int)>& fn);

}  // namespace sns
