#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace rtchemo {

// Worker cap from RT_THREADS, else the hardware count.
inline int worker_count_from_env() {
    if (const char* env = std::getenv("RT_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Static contiguous partition of [0, n). Each index is processed by exactly
// one worker and no state is shared, so results do not depend on the
// worker count. The first exception thrown by any worker is rethrown.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
    if (w <= 1) {
        if (n > 0) fn(std::size_t{0}, n);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    auto guarded = [&](std::size_t b, std::size_t e) {
        try {
            fn(b, e);
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(w - 1);
    const std::size_t chunk = n / w;
    const std::size_t rem = n % w;
    std::size_t begin = 0;
    std::size_t first_end = 0;
    for (std::size_t k = 0; k < w; ++k) {
        const std::size_t end = begin + chunk + (k < rem ? 1 : 0);
        if (k == 0)
            first_end = end;
        else
            pool.emplace_back([&guarded, begin, end] { guarded(begin, end); });
        begin = end;
    }
    guarded(std::size_t{0}, first_end);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace rtchemo
