#pragma once

#include <cstddef>
#include <functional>

namespace carnot {

/// Worker count used by parallel loops: --threads override, else
/// CARNOT_KIT_THREADS, else hardware concurrency.
int thread_count();
void set_thread_count(int n);

/// Runs fn(i) for i in [0, count). Work is split across threads; each index
/// writes only its own output slot, so results are identical to a serial run.
/// Nested calls run serially to avoid oversubscription.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace carnot
