#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace rbu {

// Path loops are cut into chunks of fixed size. Chunk boundaries never depend
// on the worker count, and per-chunk partial results are combined in chunk
// order, so every reduction is bit-identical for any thread setting.
inline constexpr std::size_t kChunkSize = 4096;

void set_thread_count(unsigned threads);
unsigned thread_count();

inline std::size_t chunk_count(std::size_t n) { return (n + kChunkSize - 1) / kChunkSize; }

using ChunkFn = std::function<void(std::size_t chunk, std::size_t begin, std::size_t end)>;

void parallel_chunks(std::size_t n, const ChunkFn& fn);

// Runs fn(i) for i in [0, n) with one task per index; used for family sweeps.
void parallel_tasks(std::size_t n, const std::function<void(std::size_t)>& fn);

// Fixed-order sum of fn(i) over [0, n).
template <class F>
double ordered_sum(std::size_t n, F&& fn) {
  std::vector<double> partial(chunk_count(n), 0.0);
  parallel_chunks(n, [&](std::size_t c, std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += fn(i);
    partial[c] = s;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Sample mean and standard error with the fixed-order reduction.
MeanEstimate mean_and_se(const std::vector<double>& values);

}  // namespace rbu
