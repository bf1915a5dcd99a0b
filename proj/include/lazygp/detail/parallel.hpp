#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace lazygp::detail {

// Runs fn(i) for i in [0, jobs) on up to hardware_concurrency() threads using
// a static block partition. Results must be written to pre-sized slots so the
// outcome is identical no matter how many threads run.
template <typename Fn>
void parallel_for(std::size_t jobs, Fn&& fn) {
    if (jobs == 0) return;
    std::size_t workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = std::min(workers, jobs);

    if (workers == 1) {
        for (std::size_t i = 0; i < jobs; ++i) fn(i);
        return;
    }

    std::vector<std::thread> threads;
    threads.reserve(workers);
    const std::size_t chunk = (jobs + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(begin + chunk, jobs);
        if (begin >= end) break;
        threads.emplace_back([&fn, begin, end] {
            for (std::size_t i = begin; i < end; ++i) fn(i);
        });
    }
    for (std::thread& t : threads) t.join();
}

} // namespace lazygp::detail
