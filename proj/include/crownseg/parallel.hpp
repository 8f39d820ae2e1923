#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace crownseg
{
/// Runs fn(i) for i in [0, n) over `threads` workers in contiguous blocks.
/// fn must only write state owned by index i, so the result does not depend
/// on the worker count.
template <typename Fn>
void parallel_for(size_t n, unsigned threads, Fn &&fn, size_t min_per_worker = 256)
{
  const size_t max_workers = std::max<size_t>(1, n / std::max<size_t>(1, min_per_worker));
  const size_t workers = std::min<size_t>(std::max(1u, threads), max_workers);
  if (workers <= 1)
  {
    for (size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  const size_t block = (n + workers - 1) / workers;
  for (size_t w = 1; w < workers; ++w)
  {
    const size_t begin = w * block, end = std::min(n, begin + block);
    pool.emplace_back([&fn, begin, end] {
      for (size_t i = begin; i < end; ++i)
        fn(i);
    });
  }
  for (size_t i = 0; i < std::min(n, block); ++i)
    fn(i);
}
}  // namespace crownseg
