#pragma once

#include <functional>

namespace bseg {

// Process-wide worker count for per-image parallel sections. Results are
// bitwise independent of the value because every parallel site writes into
// per-index slots and reduces in fixed index order afterwards; reproducibility
// mode (--deterministic) still forces 1 to keep execution single-threaded.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [0, n). Serial when thread_count()==1 or n<=1.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace bseg
