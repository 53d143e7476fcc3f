#pragma once

// Deterministic block-parallel loops. Work is cut into fixed-size blocks whose
// boundaries do not depend on the worker count; callers write one result slot
// per block and merge slots in block order, so reductions are bit-identical
// for any number of workers.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pcsft {

inline constexpr std::size_t kTrialBlock = 4096;

/// Number of worker threads used by Monte Carlo loops (0 = hardware).
void set_worker_count(unsigned workers);
unsigned worker_count();

inline std::size_t block_count(std::size_t n_items, std::size_t block = kTrialBlock) {
  return (n_items + block - 1) / block;
}

/// Calls body(block_index, begin, end) once per block, from up to
/// worker_count() threads.
template <class Body>
void for_each_block(std::size_t n_items, Body&& body, std::size_t block = kTrialBlock) {
  const std::size_t blocks = block_count(n_items, block);
  if (blocks == 0) return;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, worker_count()), blocks));

  auto run_block = [&](std::size_t b) {
    const std::size_t begin = b * block;
    body(b, begin, std::min(n_items, begin + block));
  };
  if (workers == 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        for (std::size_t b = next++; b < blocks; b = next++) run_block(b);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = blocks;
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace pcsft
