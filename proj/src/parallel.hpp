#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace bubblelab::detail {

// Runs fn(worker, begin, end) over contiguous path ranges. Results must only
// depend on the path index, never on the worker that produced them.
template <class Fn>
void for_path_ranges(std::size_t n_paths, std::size_t workers, Fn&& fn) {
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n_paths, 1));
    if (workers == 1) {
        fn(std::size_t{0}, std::size_t{0}, n_paths);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n_paths + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = std::min(n_paths, w * chunk);
        const std::size_t end = std::min(n_paths, begin + chunk);
        pool.emplace_back([&, w, begin, end] {
            try {
                fn(w, begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace bubblelab::detail
