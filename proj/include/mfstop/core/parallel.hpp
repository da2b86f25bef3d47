#pragma once

#include <cstddef>
#include <functional>

namespace mfstop {

// Runs body(begin, end) over contiguous chunks of [0, count) on up to
// `threads` workers and rethrows the exception of the lowest failing chunk.
// threads <= 1 runs inline.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t begin, std::size_t end)>& body,
                  std::size_t min_chunk = 1);

int hardware_threads();

}  // namespace mfstop
