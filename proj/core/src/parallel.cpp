#include "mumanifold/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace mumanifold {

unsigned worker_count(unsigned requested) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MU_MANIFOLD_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap > 0) n = std::min(n, static_cast<unsigned>(cap));
    } catch (const std::exception&) {
      // ignored: malformed caps leave the hardware default
    }
  }
  if (requested > 0) n = std::min(n, requested);
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  unsigned workers) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  pool.reserve(count);
  for (unsigned w = 0; w < count; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mumanifold
