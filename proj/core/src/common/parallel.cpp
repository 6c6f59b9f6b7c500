#include "nalpha/common/parallel.hpp"

namespace nalpha {

namespace {
std::atomic<std::size_t> g_threads{0};
}

std::size_t worker_threads() {
    const std::size_t n = g_threads.load();
    if (n != 0) return n;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void set_worker_threads(std::size_t n) { g_threads.store(n); }

}  // namespace nalpha
