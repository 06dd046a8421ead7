#include "rare/threading.hpp"

#include <cstdlib>
#include <thread>
#include <vector>

namespace rare {

int worker_count() {
  if (const char* env = std::getenv("RARE_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<int>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
  if (n <= 0) return;
  int64_t workers = worker_count();
  if (workers > n) workers = n;
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers - 1));
  for (int64_t w = 1; w < workers; ++w) {
    int64_t begin = w * chunk;
    int64_t end = begin + chunk < n ? begin + chunk : n;
    if (begin >= end) break;
    pool.emplace_back(fn, begin, end);
  }
  fn(0, chunk < n ? chunk : n);
  for (auto& t : pool) t.join();
}

}  // namespace rare
