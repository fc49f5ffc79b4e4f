#include "rbu/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace rbu {

namespace {
std::atomic<unsigned> g_threads{1};
// Nested regions (a family sweep whose members run path loops) execute serially
// inside the outer worker.
thread_local bool t_in_region = false;

void run_indexed(std::size_t count, const std::function<void(std::size_t)>& body) {
  const unsigned workers = std::min<std::size_t>(g_threads.load(), count);
  if (workers <= 1 || t_in_region) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    t_in_region = true;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}
}  // namespace

void set_thread_count(unsigned threads) { g_threads.store(std::max(1u, threads)); }

unsigned thread_count() { return g_threads.load(); }

void parallel_chunks(std::size_t n, const ChunkFn& fn) {
  const std::size_t chunks = chunk_count(n);
  run_indexed(chunks, [&](std::size_t c) {
    const std::size_t b = c * kChunkSize;
    fn(c, b, std::min(n, b + kChunkSize));
  });
}

void parallel_tasks(std::size_t n, const std::function<void(std::size_t)>& fn) { run_indexed(n, fn); }

MeanEstimate mean_and_se(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n == 0) return {};
  const double mean = ordered_sum(n, [&](std::size_t i) { return values[i]; }) / static_cast<double>(n);
  if (n == 1) return {mean, 0.0};
  const double ss = ordered_sum(n, [&](std::size_t i) {
    const double d = values[i] - mean;
    return d * d;
  });
  const double var = ss / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace rbu
