#pragma once

#include <cstddef>
#include <functional>

namespace rfadv {

// Worker count for data-parallel loops: RFADV_WORKERS env var when set,
// otherwise std::thread::hardware_concurrency().
int worker_count();

// Runs fn(i) for i in [0, n) on a static block partition across workers.
// Callers must keep per-index outputs and reduce in index order afterwards,
// so results never depend on the worker count or scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace rfadv
