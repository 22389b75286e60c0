#pragma once

#include <cstddef>
#include <exception>
#include <limits>

#include <omp.h>

namespace spikeglm::detail {

inline int resolve_threads(unsigned threads)
{
    return threads == 0 ? omp_get_max_threads() : static_cast<int>(threads);
}

// Static-schedule parallel loop over [0, n). Each iteration must write only
// its own output slots. An exception thrown by the lowest failing index is
// rethrown on the calling thread, so the reported error does not depend on
// the schedule.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body)
{
    const int nt = resolve_threads(threads);
    if (nt <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::exception_ptr error;
    std::size_t error_index = std::numeric_limits<std::size_t>::max();
#pragma omp parallel for num_threads(nt) schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(spikeglm_parallel_error)
            if (static_cast<std::size_t>(i) < error_index) {
                error_index = static_cast<std::size_t>(i);
                error = std::current_exception();
            }
        }
    }
    if (error)
        std::rethrow_exception(error);
}

}  // namespace spikeglm::detail
