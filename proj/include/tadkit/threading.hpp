#ifndef TADKIT_THREADING_HPP
#define TADKIT_THREADING_HPP

#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace tadkit {

// Worker cap: explicit flag value, else TADKIT_THREADS, else hardware.
inline int resolve_threads(int flag_value = 0) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("TADKIT_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Static round-robin split of [0, n); results must not depend on schedule.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w]() {
            try {
                for (int i = w; i < n; i += threads) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace tadkit

#endif
