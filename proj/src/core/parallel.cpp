#include "mfstop/core/parallel.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace mfstop {

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t, std::size_t)>& body, std::size_t min_chunk) {
    if (count == 0) return;
    std::size_t workers = threads <= 1 ? 1 : static_cast<std::size_t>(threads);
    workers = std::min(workers, std::max<std::size_t>(1, count / std::max<std::size_t>(1, min_chunk)));
    if (workers <= 1) {
        body(0, count);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = count * w / workers;
            const std::size_t end = count * (w + 1) / workers;
            pool.emplace_back([&, w, begin, end] {
                try {
                    body(begin, end);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

int hardware_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace mfstop
