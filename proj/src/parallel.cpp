#include "erma/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace erma {

namespace {
std::atomic<int> g_threads{0};
thread_local bool t_inside = false;
}

void set_threads(int k) { g_threads.store(std::max(0, k)); }

int threads() {
    int k = g_threads.load();
    if (k > 0) return k;
    return std::max(1u, std::thread::hardware_concurrency());
}

void for_chunks(std::size_t n, std::size_t chunk,
                const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    chunk = std::max<std::size_t>(1, chunk);
    std::size_t nchunks = chunk_count(n, chunk);
    auto run = [&](std::size_t c) { body(c, c * chunk, std::min(n, (c + 1) * chunk)); };
    std::size_t workers = t_inside ? 1 : std::min<std::size_t>(threads(), nchunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < nchunks; ++c) run(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        bool outer = t_inside;
        t_inside = true;
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= nchunks) {
                t_inside = outer;
                return;
            }
            try {
                run(c);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace erma
