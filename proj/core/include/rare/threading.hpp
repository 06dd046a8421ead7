#pragma once

#include <cstdint>
#include <functional>

namespace rare {

// Worker budget: RARE_THREADS env var if set (>=1), else hardware concurrency.
int worker_count();

// Runs fn(begin, end) over contiguous index blocks, one block per worker.
// Blocks never overlap and cover [0, n). With independent per-index writes the
// result is bit-identical to a sequential loop regardless of worker count.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn);

}  // namespace rare
