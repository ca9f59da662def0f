#ifndef HYPERTRAIN_THREADING_HPP
#define HYPERTRAIN_THREADING_HPP

#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hypertrain {

/// Worker cap: HYPERTRAIN_THREADS if set, else the available cores.
inline unsigned worker_count() {
    if (const char* env = std::getenv("HYPERTRAIN_THREADS")) {
        const long n = std::atol(env);
        if (n >= 1) return unsigned(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

/// Run fn(i) for i in [0, n). Each call writes only to its own index, so
/// results are position-addressed and any reduction the caller performs in
/// index order is deterministic regardless of thread count.
template <class Fn>
void parallel_for_indexed(std::size_t n, Fn&& fn) {
    const unsigned workers = std::min<std::size_t>(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> threads;
    std::exception_ptr first_error = nullptr;
    std::mutex err_mutex;
    for (unsigned w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace hypertrain

#endif
