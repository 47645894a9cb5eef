#include "gmxa/common.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace gmxa {

namespace {
int g_max_threads = 0;  // 0 = hardware concurrency
}

int max_threads() {
  if (g_max_threads > 0) return g_max_threads;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void set_max_threads(int n) { g_max_threads = n; }

void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  int workers = std::min<std::int64_t>(max_threads(), n);
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  // Fixed block partition: results never depend on scheduling.
  std::int64_t block = (n + workers - 1) / workers;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  for (int w = 0; w < workers; ++w) {
    std::int64_t lo = w * block;
    std::int64_t hi = std::min<std::int64_t>(n, lo + block);
    if (lo >= hi) break;
    threads.emplace_back([&, lo, hi]() {
      try {
        fn(lo, hi);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

double parallel_sum(std::int64_t n, const std::function<double(std::int64_t)>& term) {
  if (n <= 0) return 0.0;
  int workers = std::min<std::int64_t>(max_threads(), n);
  std::int64_t block = (n + workers - 1) / workers;
  int blocks = static_cast<int>((n + block - 1) / block);
  std::vector<double> partial(blocks, 0.0);
  parallel_for(n, [&](std::int64_t lo, std::int64_t hi) {
    double acc = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) acc += term(i);
    partial[lo / block] += acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;  // fixed block order
  return total;
}

}  // namespace gmxa
