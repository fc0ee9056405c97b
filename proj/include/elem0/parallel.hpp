#pragma once

#include <cstddef>
#include <functional>

namespace elem0 {

// Splits [0, n) into `threads` contiguous chunks and runs body(begin, end) on
// each. Chunk boundaries depend only on n and threads. The first exception
// thrown by a worker is rethrown on the calling thread.
void parallel_chunks(std::size_t n, int threads,
                     const std::function<void(std::size_t begin, std::size_t end)>& body);

template <typename F>
void parallel_for(std::size_t n, int threads, F&& body) {
  parallel_chunks(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) body(i);
  });
}

int default_thread_count();

}  // namespace elem0
