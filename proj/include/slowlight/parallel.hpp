#pragma once

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace slowlight {

/// Thread count from SLOWLIGHT_THREADS, defaulting to the hardware concurrency.
inline unsigned worker_count() {
    if (const char* env = std::getenv("SLOWLIGHT_THREADS")) {
        int n = 0;
        const auto r = std::from_chars(env, env + std::char_traits<char>::length(env), n);
        if (r.ec == std::errc() && n > 0) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(row) for row in [0, rows) on worker threads, rethrowing the first error.
inline void parallel_rows(int rows, const std::function<void(int)>& body) {
    const unsigned n = std::min<unsigned>(worker_count(), std::max(rows, 1));
    if (n <= 1) {
        for (int r = 0; r < rows; ++r) body(r);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n);
    for (unsigned t = 0; t < n; ++t)
        pool.emplace_back([&, t] {
            try {
                for (int r = static_cast<int>(t); r < rows; r += static_cast<int>(n)) body(r);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace slowlight
