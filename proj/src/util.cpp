#include "fairfis/util.hpp"

#include <charconv>
#include <cstdio>

namespace fairfis {

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

void parallel_for(std::int64_t count, int threads, const std::function<void(std::int64_t)>& fn) {
    if (threads < 1) threads = 1;
    if (threads == 1 || count <= 1) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    threads = static_cast<int>(std::min<std::int64_t>(threads, count));
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            for (std::int64_t i = w; i < count; i += threads) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace fairfis
