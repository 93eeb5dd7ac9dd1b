#include "tsb/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tsb {

namespace {
std::atomic<unsigned> g_max_threads{0};
thread_local bool tl_inside_worker = false;

unsigned resolved_threads() {
  unsigned n = g_max_threads.load(std::memory_order_relaxed);
  if (n == 0) n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}
}  // namespace

void set_max_threads(unsigned n) {
  g_max_threads.store(n, std::memory_order_relaxed);
}

unsigned max_threads() { return resolved_threads(); }

void parallel_for(std::size_t count, std::size_t block_size,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
  if (count == 0) return;
  if (block_size == 0) block_size = 1;
  const std::size_t blocks = (count + block_size - 1) / block_size;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolved_threads(), blocks));

  if (workers <= 1 || tl_inside_worker) {
    for (std::size_t b = 0; b < blocks; ++b) {
      fn(b * block_size, std::min(count, (b + 1) * block_size));
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    tl_inside_worker = true;
    for (;;) {
      const std::size_t b = next.fetch_add(1, std::memory_order_relaxed);
      if (b >= blocks) break;
      try {
        fn(b * block_size, std::min(count, (b + 1) * block_size));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
    tl_inside_worker = false;
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned t = 0; t + 1 < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace tsb
