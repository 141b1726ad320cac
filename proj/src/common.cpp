#include "poly/common.hpp"

#include <algorithm>
#include <mutex>

namespace poly {

void parallel_chunks(std::size_t n, unsigned threads,
                     const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    threads = std::max(1u, threads);
    const std::size_t nchunks = std::min<std::size_t>(threads, n);
    if (nchunks == 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nchunks);
    const std::size_t base = n / nchunks;
    const std::size_t extra = n % nchunks;
    std::size_t begin = 0;
    std::exception_ptr first_error;
    std::mutex err_mutex;
    for (std::size_t c = 0; c < nchunks; ++c) {
        const std::size_t len = base + (c < extra ? 1 : 0);
        const std::size_t end = begin + len;
        pool.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
        begin = end;
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace poly
