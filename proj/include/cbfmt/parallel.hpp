#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace cbfmt {

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first exception is rethrown.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    std::size_t workers = std::min<std::size_t>(n, threads < 1 ? 1 : static_cast<std::size_t>(threads));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mtx;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mtx);
                    if (!err) err = std::current_exception();
                    next.store(n);
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

} // namespace cbfmt
