#include "c2f/parallel.hpp"

#include <atomic>
#include <thread>

namespace c2f {

namespace {
std::atomic<int> g_max_workers{1};
}

void set_max_workers(int n) {
    g_max_workers.store(n < 0 ? 0 : n);
}

int max_workers() { return g_max_workers.load(); }

int worker_count() {
    int n = g_max_workers.load();
    if (n == 0) {
        unsigned hw = std::thread::hardware_concurrency();
        n = hw == 0 ? 1 : static_cast<int>(hw);
    }
    return n;
}

} // namespace c2f
