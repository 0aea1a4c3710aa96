#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace fsdim {

/// Worker count: FSDIM_THREADS if set to a positive integer, else the hardware
/// concurrency (at least 1).
inline unsigned worker_count() {
  if (const char* env = std::getenv("FSDIM_THREADS")) {
    try {
      long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Splits [begin, end) into contiguous chunks and runs f(chunk_index, lo, hi) on each,
/// one thread per chunk. Chunk boundaries depend only on the range and worker count.
template <class F>
void parallel_chunks(std::uint64_t begin, std::uint64_t end, unsigned workers, F&& f) {
  if (end <= begin) return;
  const std::uint64_t n = end - begin;
  workers = static_cast<unsigned>(std::clamp<std::uint64_t>(workers, 1, n));
  if (workers == 1) {
    f(0u, begin, end);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  threads.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    std::uint64_t lo = begin + n * w / workers;
    std::uint64_t hi = begin + n * (w + 1) / workers;
    threads.emplace_back([&f, &errors, w, lo, hi] {
      try {
        f(w, lo, hi);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace fsdim
